#pragma once

// JSON-lines serialization for samples, predictions and score records.
// Schema reference: docs/manifest_format.md

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"

namespace etbench {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline json interval_to_json(const TimeInterval &iv) {
  return json::array({iv.start, iv.end});
}

inline TimeInterval interval_from_json(const json &j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw FormatError("interval must be a [start, end] number pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace detail {

inline json intervals_to_json(const std::vector<TimeInterval> &ivs) {
  json a = json::array();
  for (const auto &iv : ivs) a.push_back(interval_to_json(iv));
  return a;
}

inline std::vector<TimeInterval> intervals_from_json(const json &j) {
  if (!j.is_array()) throw FormatError("expected an array of intervals");
  std::vector<TimeInterval> out;
  out.reserve(j.size());
  for (const auto &e : j) out.push_back(interval_from_json(e));
  return out;
}

inline char letter_from_json(const json &j) {
  if (!j.is_string() || j.get<std::string>().size() != 1)
    throw FormatError("answer must be a single letter");
  return j.get<std::string>()[0];
}

inline json segments_to_json(const std::vector<CaptionedSegment> &segs) {
  json a = json::array();
  for (const auto &s : segs)
    a.push_back({{"interval", interval_to_json(s.interval)}, {"caption", s.caption}});
  return a;
}

inline std::vector<CaptionedSegment> segments_from_json(const json &j) {
  if (!j.is_array()) throw FormatError("segments must be an array");
  std::vector<CaptionedSegment> out;
  for (const auto &e : j)
    out.push_back({interval_from_json(e.at("interval")), e.at("caption").get<std::string>()});
  return out;
}

// Shared by GroundTruth and ParsedPrediction.
struct PayloadWriter {
  json operator()(const McqAnswer &a) const {
    return {{"kind", "mcq"}, {"answer", std::string(1, a.letter)}};
  }
  json operator()(const SingleInterval &s) const {
    return {{"kind", "interval"}, {"interval", interval_to_json(s.interval)}};
  }
  json operator()(const IntervalSet &s) const {
    return {{"kind", "intervals"}, {"intervals", intervals_to_json(s.intervals)}};
  }
  json operator()(const HighlightRegions &h) const {
    return {{"kind", "highlights"}, {"regions", intervals_to_json(h.regions)}};
  }
  json operator()(const HighlightPoint &p) const {
    return {{"kind", "point"}, {"time", p.time}};
  }
  json operator()(const CaptionedSegments &c) const {
    return {{"kind", "captioned"}, {"segments", segments_to_json(c.segments)}};
  }
  json operator()(const GroundedMcq &g) const {
    return {{"kind", "grounded_mcq"},
            {"answer", std::string(1, g.letter)},
            {"interval", interval_to_json(g.interval)}};
  }
  json operator()(const ParseFailure &f) const {
    return {{"kind", "failure"}, {"reason", f.reason}};
  }
};

} // namespace detail

inline json to_json(const GroundTruth &gt) {
  return std::visit(detail::PayloadWriter{}, gt);
}

inline json to_json(const ParsedPrediction &p) {
  return std::visit(detail::PayloadWriter{}, p);
}

inline GroundTruth ground_truth_from_json(const json &j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "mcq") return McqAnswer{detail::letter_from_json(j.at("answer"))};
  if (kind == "interval") return SingleInterval{interval_from_json(j.at("interval"))};
  if (kind == "intervals")
    return IntervalSet{detail::intervals_from_json(j.at("intervals"))};
  if (kind == "highlights")
    return HighlightRegions{detail::intervals_from_json(j.at("regions"))};
  if (kind == "captioned")
    return CaptionedSegments{detail::segments_from_json(j.at("segments"))};
  if (kind == "grounded_mcq")
    return GroundedMcq{detail::letter_from_json(j.at("answer")),
                       interval_from_json(j.at("interval"))};
  throw FormatError("unknown ground_truth kind: " + kind);
}

inline ParsedPrediction prediction_from_json(const json &j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "point") return HighlightPoint{j.at("time").get<double>()};
  if (kind == "failure") return ParseFailure{j.at("reason").get<std::string>()};
  return std::visit(
      [](auto &&v) -> ParsedPrediction {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, HighlightRegions>)
          throw FormatError("highlights is not a prediction kind");
        else
          return v;
      },
      ground_truth_from_json(j));
}

inline json to_json(const Sample &s) {
  return {{"id", s.id},
          {"task", std::string(task_name(s.task))},
          {"source", s.source},
          {"video", s.video},
          {"duration", s.duration},
          {"instruction", s.instruction},
          {"ground_truth", to_json(s.ground_truth)}};
}

inline Sample sample_from_json(const json &j) {
  try {
    Sample s;
    s.id = j.at("id").get<std::string>();
    auto task = task_from_name(j.at("task").get<std::string>());
    if (!task) throw FormatError("unknown task: " + j.at("task").get<std::string>());
    s.task = *task;
    s.source = j.at("source").get<std::string>();
    s.video = j.at("video").get<std::string>();
    s.duration = j.at("duration").get<double>();
    s.instruction = j.at("instruction").get<std::string>();
    s.ground_truth = ground_truth_from_json(j.at("ground_truth"));
    return s;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed sample: ") + e.what());
  }
}

inline json to_json(const ScoreRecord &r) {
  return {{"sample_id", r.sample_id}, {"values", r.values}};
}

inline ScoreRecord score_record_from_json(const json &j) {
  try {
    ScoreRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.values = j.at("values").get<std::map<std::string, double>>();
    return r;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed score record: ") + e.what());
  }
}

/// Calls `fn` with each non-blank parsed line; line numbers are 1-based.
inline void for_each_json_line(std::istream &in,
                               const std::function<void(const json &, std::size_t)> &fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    fn(j, lineno);
  }
}

inline std::vector<Sample> read_manifest(std::istream &in) {
  std::vector<Sample> out;
  std::set<std::string> seen;
  for_each_json_line(in, [&](const json &j, std::size_t lineno) {
    Sample s = sample_from_json(j);
    try {
      validate_sample(s);
    } catch (const InvariantViolation &e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!seen.insert(s.id).second)
      throw FormatError("line " + std::to_string(lineno) + ": duplicate id " + s.id);
    out.push_back(std::move(s));
  });
  return out;
}

inline std::vector<Sample> read_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path);
  return read_manifest(in);
}

inline void write_manifest(std::ostream &out, const std::vector<Sample> &samples) {
  for (const auto &s : samples) out << to_json(s).dump() << '\n';
}

inline std::vector<ScoreRecord> read_scores(std::istream &in) {
  std::vector<ScoreRecord> out;
  for_each_json_line(in, [&](const json &j, std::size_t) {
    out.push_back(score_record_from_json(j));
  });
  return out;
}

inline std::vector<ScoreRecord> read_scores(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scores: " + path);
  return read_scores(in);
}

} // namespace etbench
