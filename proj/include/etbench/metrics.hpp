#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "domain.hpp"

namespace etbench {

/// Ordered IoU thresholds, each in (0, 1).
class IoUThresholds {
public:
  IoUThresholds() : values_{0.1, 0.3, 0.5, 0.7} {}
  explicit IoUThresholds(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("IoU thresholds: empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] > 0.0 && values_[i] < 1.0))
        throw std::invalid_argument("IoU thresholds: value outside (0,1)");
      if (i > 0 && !(values_[i] > values_[i - 1]))
        throw std::invalid_argument("IoU thresholds: not strictly increasing");
    }
  }
  const std::vector<double> &values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

private:
  std::vector<double> values_;
};

struct ClipGrid {
  double clip_length = 1.0;
  double duration = 0.0;

  std::size_t num_clips() const {
    if (!(clip_length > 0.0)) throw std::invalid_argument("clip_length must be positive");
    if (!(duration > 0.0)) return 0;
    return static_cast<std::size_t>(std::ceil(duration / clip_length));
  }
  /// Midpoint of clip i; the last clip may be partial.
  double midpoint(std::size_t i) const {
    const double lo = static_cast<double>(i) * clip_length;
    const double hi = std::min(lo + clip_length, duration);
    return 0.5 * (lo + hi);
  }
};

/// Per-threshold scores plus their mean.
struct ThresholdScores {
  std::vector<double> per_threshold;
  double mean = 0.0;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_of(double p, double r) {
  return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline double iou(const TimeInterval &a, const TimeInterval &b) {
  const double inter =
      std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.duration() + b.duration() - inter;
  if (uni <= 0.0) return (a.start == b.start && a.end == b.end) ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace detail {

inline ThresholdScores threshold_hits(std::optional<double> value,
                                      const IoUThresholds &thetas) {
  ThresholdScores out;
  out.per_threshold.reserve(thetas.size());
  for (double t : thetas)
    out.per_threshold.push_back(value && *value >= t ? 1.0 : 0.0);
  out.mean = std::accumulate(out.per_threshold.begin(), out.per_threshold.end(), 0.0) /
             static_cast<double>(thetas.size());
  return out;
}

} // namespace detail

/// Recall@1 style: the first predicted boundary (if any) against one truth.
inline ThresholdScores score_single_grounding(const std::optional<TimeInterval> &pred,
                                              const TimeInterval &gt,
                                              const IoUThresholds &thetas = {}) {
  std::optional<double> v;
  if (pred) v = iou(*pred, gt);
  return detail::threshold_hits(v, thetas);
}

enum class MatchStrategy {
  /// Maximum-cardinality one-to-one matching (augmenting paths).
  Optimal,
  /// Descending-IoU greedy acceptance; can under-count in rare layouts.
  Greedy,
};

/// Number of one-to-one pred/gt matches with IoU >= theta.
inline std::size_t count_matches(const std::vector<TimeInterval> &preds,
                                 const std::vector<TimeInterval> &gts, double theta,
                                 MatchStrategy strategy = MatchStrategy::Optimal) {
  const std::size_t np = preds.size(), ng = gts.size();
  std::vector<std::vector<double>> m(np, std::vector<double>(ng, 0.0));
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t g = 0; g < ng; ++g) m[p][g] = iou(preds[p], gts[g]);

  if (strategy == MatchStrategy::Greedy) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    for (std::size_t p = 0; p < np; ++p)
      for (std::size_t g = 0; g < ng; ++g)
        if (m[p][g] >= theta) cand.emplace_back(m[p][g], g, p);
    std::sort(cand.begin(), cand.end(), [](const auto &x, const auto &y) {
      if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
      if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
      return std::get<2>(x) < std::get<2>(y);
    });
    std::vector<bool> pu(np, false), gu(ng, false);
    std::size_t n = 0;
    for (const auto &[v, g, p] : cand) {
      if (pu[p] || gu[g]) continue;
      pu[p] = gu[g] = true;
      ++n;
    }
    return n;
  }

  // Kuhn's augmenting paths; gts visited in index order for determinism.
  std::vector<long> owner(ng, -1);
  std::vector<bool> seen;
  auto augment = [&](auto &&self, std::size_t p) -> bool {
    for (std::size_t g = 0; g < ng; ++g) {
      if (m[p][g] < theta || seen[g]) continue;
      seen[g] = true;
      if (owner[g] < 0 || self(self, static_cast<std::size_t>(owner[g]))) {
        owner[g] = static_cast<long>(p);
        return true;
      }
    }
    return false;
  };
  std::size_t n = 0;
  for (std::size_t p = 0; p < np; ++p) {
    seen.assign(ng, false);
    if (augment(augment, p)) ++n;
  }
  return n;
}

/// Set-level F1 at one threshold: all predicted boundaries count.
inline PRF score_set_grounding(const std::vector<TimeInterval> &preds,
                               const std::vector<TimeInterval> &gts, double theta,
                               MatchStrategy strategy = MatchStrategy::Optimal) {
  PRF out;
  if (gts.empty()) return out;
  const double n = static_cast<double>(count_matches(preds, gts, theta, strategy));
  out.precision = preds.empty() ? 0.0 : n / static_cast<double>(preds.size());
  out.recall = n / static_cast<double>(gts.size());
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

/// Set-level F1 at every threshold; `mean` averages the F1 values.
inline ThresholdScores score_set_grounding_all(const std::vector<TimeInterval> &preds,
                                               const std::vector<TimeInterval> &gts,
                                               const IoUThresholds &thetas = {}) {
  ThresholdScores out;
  for (double t : thetas) out.per_threshold.push_back(score_set_grounding(preds, gts, t).f1);
  out.mean = std::accumulate(out.per_threshold.begin(), out.per_threshold.end(), 0.0) /
             static_cast<double>(thetas.size());
  return out;
}

namespace detail {

/// Marks clips whose midpoint lies inside any interval (closed).
inline std::vector<bool> mark_clips(const std::vector<TimeInterval> &ivs,
                                    const ClipGrid &grid) {
  const std::size_t n = grid.num_clips();
  std::vector<bool> marked(n, false);
  if (n == 0) return marked;
  const double L = grid.clip_length;
  const double last = static_cast<double>(n - 1);
  for (const auto &iv : ivs) {
    // Full clips have midpoint (i + 0.5) * L, so i lies in
    // [ceil(start/L - 0.5), floor(end/L - 0.5)]. The range is widened by one
    // on each side and every candidate is confirmed against its midpoint,
    // which also covers the partial last clip and floating-point rounding.
    const double lo = std::clamp(std::ceil(iv.start / L - 0.5) - 1.0, 0.0, last);
    const double hi = std::clamp(std::floor(iv.end / L - 0.5) + 1.0, 0.0, last);
    for (auto i = static_cast<std::size_t>(lo); i <= static_cast<std::size_t>(hi); ++i) {
      const double m = grid.midpoint(i);
      if (m >= iv.start && m <= iv.end) marked[i] = true;
    }
  }
  return marked;
}

} // namespace detail

/// Clip-level precision/recall/F1 for extractive summarization.
inline PRF score_evs(const std::vector<TimeInterval> &preds,
                     const std::vector<TimeInterval> &gts, const ClipGrid &grid) {
  const auto pm = detail::mark_clips(preds, grid);
  const auto gm = detail::mark_clips(gts, grid);
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    np += pm[i];
    ng += gm[i];
    tp += pm[i] && gm[i];
  }
  PRF out;
  out.precision = np ? static_cast<double>(tp) / static_cast<double>(np) : 0.0;
  out.recall = ng ? static_cast<double>(tp) / static_cast<double>(ng) : 0.0;
  out.f1 = f1_of(out.precision, out.recall);
  return out;
}

/// 1.0 iff the predicted time lies inside (inclusive) any highlight region.
inline double score_vhd(const std::optional<double> &pred,
                        const std::vector<TimeInterval> &regions) {
  if (!pred) return 0.0;
  for (const auto &r : regions)
    if (*pred >= r.start && *pred <= r.end) return 1.0;
  return 0.0;
}

/// Hit when the best IoU against any truth reaches the threshold.
inline ThresholdScores score_tem(const std::optional<TimeInterval> &pred,
                                 const std::vector<TimeInterval> &gts,
                                 const IoUThresholds &thetas = {}) {
  std::optional<double> best;
  if (pred && !gts.empty()) {
    best = 0.0;
    for (const auto &g : gts) best = std::max(*best, iou(*pred, g));
  }
  return detail::threshold_hits(best, thetas);
}

/// Hit requires the right letter and IoU >= threshold.
inline ThresholdScores score_gvq(const std::optional<GroundedMcq> &pred,
                                 const GroundedMcq &gt, const IoUThresholds &thetas = {}) {
  std::optional<double> v;
  if (pred && pred->letter == gt.letter) v = iou(pred->interval, gt.interval);
  return detail::threshold_hits(v, thetas);
}

inline double score_mcq(const std::optional<char> &pred, char gt) {
  return pred && *pred == gt ? 1.0 : 0.0;
}

} // namespace etbench
