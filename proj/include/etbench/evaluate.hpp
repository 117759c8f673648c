#pragma once

// Per-sample scoring: parse a raw response for the sample's task and turn it
// into a ScoreRecord of named values in [0, 1].
//
// Keys: "acc" (multiple choice), "f1" and "f1@<theta>" (grounding and the
// boundary part of captioning), "precision"/"recall" (summarization),
// "sim" (captioning), "recall" and "recall@<theta>" (complex tasks).

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "metrics.hpp"
#include "parse.hpp"
#include "simscore.hpp"

namespace etbench {

struct EvalConfig {
  IoUThresholds thresholds;
  double clip_length = 1.0;
  SimConfig sim;
  ParseConfig parse;
};

inline std::string threshold_key(const std::string &metric, double theta) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s@%g", metric.c_str(), theta);
  return buf;
}

namespace detail {

inline void put_thresholds(ScoreRecord &rec, const std::string &metric,
                           const ThresholdScores &ts, const IoUThresholds &thetas) {
  std::size_t i = 0;
  for (double t : thetas) rec.values[threshold_key(metric, t)] = ts.per_threshold[i++];
  rec.values[metric] = ts.mean;
}

template <typename T> const T *pred_as(const ParsedPrediction &p) { return std::get_if<T>(&p); }

inline std::vector<TimeInterval> intervals_of(const std::vector<CaptionedSegment> &segs) {
  std::vector<TimeInterval> out;
  for (const auto &s : segs) out.push_back(s.interval);
  return out;
}

} // namespace detail

/// Scores one parsed prediction against a sample's ground truth. A
/// ParseFailure (or any prediction of the wrong shape) scores zero everywhere.
inline ScoreRecord score_prediction(const Sample &sample, const ParsedPrediction &pred,
                                    Embedder &embedder, const EvalConfig &cfg = {}) {
  using detail::pred_as;
  ScoreRecord rec{sample.id, {}};
  const auto &gt = sample.ground_truth;
  const auto &thetas = cfg.thresholds;
  switch (sample.task) {
  case TaskKind::RAR:
  case TaskKind::ECA:
  case TaskKind::RVQ: {
    std::optional<char> p;
    if (auto *m = pred_as<McqAnswer>(pred)) p = m->letter;
    rec.values["acc"] = score_mcq(p, std::get<McqAnswer>(gt).letter);
    break;
  }
  case TaskKind::TVG:
  case TaskKind::EPM: {
    std::optional<TimeInterval> p;
    if (auto *s = pred_as<SingleInterval>(pred)) p = s->interval;
    detail::put_thresholds(rec, "f1",
                           score_single_grounding(p, std::get<SingleInterval>(gt).interval, thetas),
                           thetas);
    break;
  }
  case TaskKind::TAL: {
    std::vector<TimeInterval> p;
    if (auto *s = pred_as<IntervalSet>(pred)) p = s->intervals;
    detail::put_thresholds(
        rec, "f1", score_set_grounding_all(p, std::get<IntervalSet>(gt).intervals, thetas), thetas);
    break;
  }
  case TaskKind::EVS: {
    std::vector<TimeInterval> p;
    if (auto *s = pred_as<IntervalSet>(pred)) p = s->intervals;
    const auto prf =
        score_evs(p, std::get<IntervalSet>(gt).intervals, ClipGrid{cfg.clip_length, sample.duration});
    rec.values["f1"] = prf.f1;
    rec.values["precision"] = prf.precision;
    rec.values["recall"] = prf.recall;
    break;
  }
  case TaskKind::VHD: {
    std::optional<double> p;
    if (auto *h = pred_as<HighlightPoint>(pred)) p = h->time;
    rec.values["f1"] = score_vhd(p, std::get<HighlightRegions>(gt).regions);
    break;
  }
  case TaskKind::DVC:
  case TaskKind::SLC: {
    std::vector<CaptionedSegment> p;
    if (auto *c = pred_as<CaptionedSegments>(pred)) p = c->segments;
    const auto &g = std::get<CaptionedSegments>(gt).segments;
    detail::put_thresholds(
        rec, "f1",
        score_set_grounding_all(detail::intervals_of(p), detail::intervals_of(g), thetas), thetas);
    rec.values["sim"] = sim_score(p, g, embedder, cfg.sim);
    break;
  }
  case TaskKind::TEM: {
    std::optional<TimeInterval> p;
    if (auto *s = pred_as<SingleInterval>(pred)) p = s->interval;
    detail::put_thresholds(rec, "recall",
                           score_tem(p, std::get<IntervalSet>(gt).intervals, thetas), thetas);
    break;
  }
  case TaskKind::GVQ: {
    std::optional<GroundedMcq> p;
    if (auto *g = pred_as<GroundedMcq>(pred)) p = *g;
    detail::put_thresholds(rec, "recall", score_gvq(p, std::get<GroundedMcq>(gt), thetas), thetas);
    break;
  }
  }
  return rec;
}

/// Parses and scores a raw response; a missing response counts as a failure.
inline ScoreRecord score_response(const Sample &sample, const std::optional<std::string> &raw,
                                  Embedder &embedder, const EvalConfig &cfg = {}) {
  const ParsedPrediction pred = raw ? parse_for_task(sample.task, *raw, sample.duration, cfg.parse)
                                    : ParsedPrediction{ParseFailure{"no-response"}};
  return score_prediction(sample, pred, embedder, cfg);
}

} // namespace etbench
