#pragma once

// Annotation repurposing: pre-filter predicates and seeded generators that
// turn source annotations into benchmark ground truths.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace etbench {

class GenerationExhausted : public std::runtime_error {
public:
  explicit GenerationExhausted(std::size_t attempts)
      : std::runtime_error("generation exhausted after " + std::to_string(attempts) +
                           " attempts"),
        attempts_(attempts) {}
  std::size_t attempts() const { return attempts_; }

private:
  std::size_t attempts_;
};

class WindowInfeasible : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Pre-filtering

enum class FilterKind {
  DurationRange,
  EventDurationRange,
  MinEvents,
  MaxSegments,
  ClassBlocklist,
  SummaryRatioRange,
  HighlightRatioRange,
};

inline constexpr std::string_view filter_kind_name(FilterKind k) {
  switch (k) {
  case FilterKind::DurationRange: return "duration_range";
  case FilterKind::EventDurationRange: return "event_duration_range";
  case FilterKind::MinEvents: return "min_events";
  case FilterKind::MaxSegments: return "max_segments";
  case FilterKind::ClassBlocklist: return "class_blocklist";
  case FilterKind::SummaryRatioRange: return "summary_ratio_range";
  case FilterKind::HighlightRatioRange: return "highlight_ratio_range";
  }
  return "";
}

struct FilterRule {
  FilterKind kind = FilterKind::DurationRange;
  double lo = 0.0;  // range kinds; also the bound for min_events / max_segments
  double hi = 0.0;
  std::set<std::string> classes;

  static FilterRule range(FilterKind k, double lo, double hi) {
    FilterRule r{k, lo, hi, {}};
    r.check();
    return r;
  }
  static FilterRule min_events(std::size_t n) {
    return {FilterKind::MinEvents, static_cast<double>(n), static_cast<double>(n), {}};
  }
  static FilterRule max_segments(std::size_t n) {
    return {FilterKind::MaxSegments, static_cast<double>(n), static_cast<double>(n), {}};
  }
  static FilterRule blocklist(std::set<std::string> classes) {
    return {FilterKind::ClassBlocklist, 0.0, 0.0, std::move(classes)};
  }

  void check() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw std::invalid_argument(std::string(filter_kind_name(kind)) +
                                  ": bounds must be finite and ordered");
  }
};

/// Facts about one candidate sample that the filters inspect.
struct SampleMeta {
  double duration = 0.0;
  std::vector<double> event_durations;
  std::size_t num_events = 0;
  std::size_t max_segments = 0;
  std::vector<std::string> classes;
  std::optional<double> summary_ratio;
  std::optional<double> highlight_ratio;
};

struct FilterDecision {
  bool keep = true;
  std::string reason; // identifier of the first failing rule when dropped
};

inline bool rule_passes(const FilterRule &r, const SampleMeta &m) {
  auto in = [&](double v) { return v >= r.lo && v <= r.hi; };
  switch (r.kind) {
  case FilterKind::DurationRange:
    return in(m.duration);
  case FilterKind::EventDurationRange:
    return std::all_of(m.event_durations.begin(), m.event_durations.end(), in);
  case FilterKind::MinEvents:
    return static_cast<double>(m.num_events) >= r.lo;
  case FilterKind::MaxSegments:
    return static_cast<double>(m.max_segments) <= r.hi;
  case FilterKind::ClassBlocklist:
    return std::none_of(m.classes.begin(), m.classes.end(),
                        [&](const std::string &c) { return r.classes.count(c) > 0; });
  case FilterKind::SummaryRatioRange:
    return !m.summary_ratio || in(*m.summary_ratio);
  case FilterKind::HighlightRatioRange:
    return !m.highlight_ratio || in(*m.highlight_ratio);
  }
  return true;
}

inline FilterDecision apply_filters(const SampleMeta &meta,
                                    const std::vector<FilterRule> &rules) {
  for (const auto &r : rules)
    if (!rule_passes(r, meta)) return {false, std::string(filter_kind_name(r.kind))};
  return {};
}

inline FilterRule filter_rule_from_json(const nlohmann::json &j) {
  const auto kind = j.at("kind").get<std::string>();
  for (auto k : {FilterKind::DurationRange, FilterKind::EventDurationRange,
                 FilterKind::SummaryRatioRange, FilterKind::HighlightRatioRange})
    if (kind == filter_kind_name(k))
      return FilterRule::range(k, j.at("lo").get<double>(), j.at("hi").get<double>());
  if (kind == "min_events") return FilterRule::min_events(j.at("min").get<std::size_t>());
  if (kind == "max_segments") return FilterRule::max_segments(j.at("max").get<std::size_t>());
  if (kind == "class_blocklist")
    return FilterRule::blocklist(j.at("classes").get<std::set<std::string>>());
  throw std::invalid_argument("unknown filter kind: " + kind);
}

inline std::vector<FilterRule> filter_rules_from_json(const nlohmann::json &j) {
  if (!j.is_array()) throw std::invalid_argument("rules file must hold a JSON list");
  std::vector<FilterRule> out;
  for (const auto &e : j) out.push_back(filter_rule_from_json(e));
  return out;
}

// ---------------------------------------------------------------------------
// Generators

inline constexpr std::size_t kDistracterAttempts = 10'000;

/// Three distracter boundaries with 0.5x-2x the truth's length, such that no
/// two of {truth, d1, d2, d3} overlap with IoU above 0.5.
inline std::vector<TimeInterval> gen_eca_distracters(const TimeInterval &gt, double duration,
                                                     Rng &rng,
                                                     std::size_t attempts = kDistracterAttempts) {
  const double len = gt.duration();
  if (!(len > 0.0)) throw std::invalid_argument("gen_eca_distracters: zero-length truth");
  const double min_len = 0.5 * len;
  const double max_len = std::min(2.0 * len, duration);
  if (min_len > duration) throw GenerationExhausted(0);

  std::vector<TimeInterval> chosen{gt};
  for (int k = 0; k < 3; ++k) {
    bool placed = false;
    for (std::size_t a = 0; a < attempts && !placed; ++a) {
      const double l = rng.uniform(min_len, max_len);
      const double s = rng.uniform(0.0, duration - l);
      const TimeInterval cand{s, std::min(s + l, duration)};
      if (std::all_of(chosen.begin(), chosen.end(),
                      [&](const TimeInterval &o) { return iou(cand, o) <= 0.5; })) {
        chosen.push_back(cand);
        placed = true;
      }
    }
    if (!placed) throw GenerationExhausted(attempts);
  }
  return {chosen.begin() + 1, chosen.end()};
}

/// Same-length boundary with zero overlap with the original (touching allowed).
inline TimeInterval gen_rvq_shifted(const TimeInterval &boundary, double duration, Rng &rng) {
  const double len = boundary.duration();
  // Feasible starts: [0, start - len] before, [end, duration - len] after.
  const double left = boundary.start - len;
  const double right_lo = boundary.end, right_hi = duration - len;
  const double left_span = left >= 0.0 ? left : -1.0;
  const double right_span = right_hi >= right_lo ? right_hi - right_lo : -1.0;
  if (left_span < 0.0 && right_span < 0.0) throw GenerationExhausted(0);

  double start;
  if (left_span < 0.0) {
    start = right_lo + rng.uniform() * right_span;
  } else if (right_span < 0.0) {
    start = rng.uniform() * left_span;
  } else {
    const double total = left_span + right_span;
    const double u = rng.uniform() * total;
    start = u < left_span ? u : right_lo + (u - left_span);
  }
  start = std::min(start, duration - len);
  return {start, start + len};
}

/// Per-frame scores from one or more annotators.
struct FrameScoreTrack {
  std::vector<std::vector<double>> scores; // one row per annotator
  double frame_rate = 1.0;

  std::size_t num_frames() const { return scores.empty() ? 0 : scores.front().size(); }

  void check() const {
    if (scores.empty() || scores.front().empty())
      throw std::invalid_argument("FrameScoreTrack: no frames");
    if (!(frame_rate > 0.0)) throw std::invalid_argument("FrameScoreTrack: frame_rate <= 0");
    for (const auto &row : scores)
      if (row.size() != scores.front().size())
        throw std::invalid_argument("FrameScoreTrack: ragged annotator rows");
  }

  std::vector<double> averaged() const {
    check();
    std::vector<double> avg(num_frames(), 0.0);
    for (const auto &row : scores)
      for (std::size_t i = 0; i < row.size(); ++i) avg[i] += row[i];
    for (double &v : avg) v /= static_cast<double>(scores.size());
    return avg;
  }
};

/// Merges runs of consecutive selected frames; frame i covers [i/fr, (i+1)/fr).
inline std::vector<TimeInterval> merge_frames(const std::vector<bool> &selected,
                                              double frame_rate) {
  std::vector<TimeInterval> out;
  std::size_t i = 0;
  while (i < selected.size()) {
    if (!selected[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < selected.size() && selected[j + 1]) ++j;
    out.push_back({static_cast<double>(i) / frame_rate, static_cast<double>(j + 1) / frame_rate});
    i = j + 1;
  }
  return out;
}

/// Number of frames to keep for a summary fraction; tolerant of products such
/// as 0.15 * 20 = 3.0000000000000004.
inline std::size_t summary_frame_count(double fraction, std::size_t n) {
  const double k = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

/// Top-fraction frames of the annotator-averaged scores, earlier frames
/// winning ties, merged into boundaries.
inline std::vector<TimeInterval> evs_ground_truth(const FrameScoreTrack &track,
                                                  double top_fraction = 0.15) {
  const auto avg = track.averaged();
  std::vector<std::size_t> order(avg.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return avg[a] > avg[b]; });
  const std::size_t k = summary_frame_count(top_fraction, avg.size());
  std::vector<bool> sel(avg.size(), false);
  for (std::size_t i = 0; i < k; ++i) sel[order[i]] = true;
  return merge_frames(sel, track.frame_rate);
}

/// All frames attaining the maximum averaged score, merged into boundaries.
inline std::vector<TimeInterval> vhd_ground_truth(const FrameScoreTrack &track) {
  const auto avg = track.averaged();
  const double best = *std::max_element(avg.begin(), avg.end());
  std::vector<bool> sel(avg.size());
  for (std::size_t i = 0; i < avg.size(); ++i) sel[i] = avg[i] == best;
  return merge_frames(sel, track.frame_rate);
}

/// A window of min(target_len, duration) seconds placed uniformly, constrained
/// to contain `must_contain` when given.
inline TimeInterval crop_video_window(double duration, double target_len, Rng &rng,
                                      const std::optional<TimeInterval> &must_contain = {}) {
  if (!(target_len > 0.0)) throw std::invalid_argument("crop_video_window: target_len <= 0");
  const double w = std::min(target_len, duration);
  double lo = 0.0, hi = duration - w;
  if (must_contain) {
    if (must_contain->duration() > w)
      throw WindowInfeasible("ground truth longer than the crop window");
    lo = std::max(lo, must_contain->end - w);
    hi = std::min(hi, must_contain->start);
  }
  const double start = hi > lo ? rng.uniform(lo, hi) : lo;
  return {start, start + w};
}

/// Re-expresses an interval in the coordinates of a cropped window.
inline TimeInterval shift_into_window(const TimeInterval &iv, const TimeInterval &window) {
  return clamp_interval({iv.start - window.start, iv.end - window.start}, window.duration());
}

} // namespace etbench
