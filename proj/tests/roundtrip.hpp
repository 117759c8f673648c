#pragma once

// Random ground truths and a tolerant comparison, shared by the template
// round-trip tests and the acceptance binary.

#include <cmath>
#include <string>
#include <vector>

#include <etbench/domain.hpp>
#include <etbench/rng.hpp>

namespace rt {

using namespace etbench;

inline TimeInterval random_interval(Rng &rng, double d) {
  const double len = rng.uniform(0.2, d / 4);
  const double s = rng.uniform(0, d - len);
  return {s, s + len};
}

inline std::string random_caption(Rng &rng) {
  static const char *words[] = {"cut", "the", "apple", "wash", "dishes", "pour", "milk",
                                "into", "a", "bowl", "stir", "slowly", "person", "opens", "door"};
  std::string s;
  for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) {
    if (!s.empty()) s += ' ';
    s += words[rng.below(std::size(words))];
  }
  return s + ".";
}

inline std::vector<TimeInterval> random_set(Rng &rng, double d, std::size_t n) {
  std::vector<TimeInterval> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_interval(rng, d));
  return out;
}

inline GroundTruth random_truth(TaskKind task, double d, Rng &rng) {
  switch (task) {
  case TaskKind::RAR:
  case TaskKind::ECA:
    return McqAnswer{static_cast<char>('A' + rng.below(4))};
  case TaskKind::RVQ:
    return McqAnswer{static_cast<char>('A' + rng.below(5))};
  case TaskKind::TVG:
  case TaskKind::EPM:
    return SingleInterval{random_interval(rng, d)};
  case TaskKind::TAL:
  case TaskKind::EVS:
  case TaskKind::TEM:
    return IntervalSet{random_set(rng, d, 1 + rng.below(5))};
  case TaskKind::VHD:
    return HighlightRegions{random_set(rng, d, 1 + rng.below(3))};
  case TaskKind::DVC:
  case TaskKind::SLC: {
    CaptionedSegments c;
    for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i)
      c.segments.push_back({random_interval(rng, d), random_caption(rng)});
    return c;
  }
  case TaskKind::GVQ:
    return GroundedMcq{static_cast<char>('A' + rng.below(4)), random_interval(rng, d)};
  }
  return McqAnswer{'A'};
}

inline bool near(const TimeInterval &a, const TimeInterval &b, double tol) {
  return std::abs(a.start - b.start) <= tol && std::abs(a.end - b.end) <= tol;
}

inline bool near(const std::vector<TimeInterval> &a, const std::vector<TimeInterval> &b,
                 double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!near(a[i], b[i], tol)) return false;
  return true;
}

/// Whether a parsed prediction recovers the ground truth it was rendered from.
/// Highlights are rendered as the midpoint of the first region; the
/// single-boundary TEM answer carries the first interval.
inline bool recovers(TaskKind task, const GroundTruth &gt, const ParsedPrediction &p,
                     double tol) {
  if (auto *m = std::get_if<McqAnswer>(&gt)) {
    auto *q = std::get_if<McqAnswer>(&p);
    return q && q->letter == m->letter;
  }
  if (auto *s = std::get_if<SingleInterval>(&gt)) {
    auto *q = std::get_if<SingleInterval>(&p);
    return q && near(q->interval, s->interval, tol);
  }
  if (auto *s = std::get_if<IntervalSet>(&gt)) {
    if (task == TaskKind::TEM) {
      auto *q = std::get_if<SingleInterval>(&p);
      return q && near(q->interval, s->intervals.front(), tol);
    }
    auto *q = std::get_if<IntervalSet>(&p);
    return q && near(q->intervals, s->intervals, tol);
  }
  if (auto *h = std::get_if<HighlightRegions>(&gt)) {
    auto *q = std::get_if<HighlightPoint>(&p);
    const auto &r = h->regions.front();
    return q && std::abs(q->time - 0.5 * (r.start + r.end)) <= tol;
  }
  if (auto *c = std::get_if<CaptionedSegments>(&gt)) {
    auto *q = std::get_if<CaptionedSegments>(&p);
    if (!q || q->segments.size() != c->segments.size()) return false;
    for (std::size_t i = 0; i < c->segments.size(); ++i)
      if (!near(q->segments[i].interval, c->segments[i].interval, tol) ||
          q->segments[i].caption != c->segments[i].caption)
        return false;
    return true;
  }
  if (auto *g = std::get_if<GroundedMcq>(&gt)) {
    auto *q = std::get_if<GroundedMcq>(&p);
    return q && q->letter == g->letter && near(q->interval, g->interval, tol);
  }
  return false;
}

} // namespace rt
