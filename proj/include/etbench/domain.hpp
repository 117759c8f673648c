#pragma once

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace etbench {

/// Closed interval of seconds inside a video.
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  constexpr double duration() const { return end - start; }
  bool valid() const {
    return std::isfinite(start) && std::isfinite(end) && start >= 0.0 &&
           start <= end;
  }
  friend bool operator==(const TimeInterval &, const TimeInterval &) = default;
};

enum class TaskKind { RAR, ECA, RVQ, TVG, EPM, TAL, EVS, VHD, DVC, SLC, TEM, GVQ };

enum class Capability { Referring, Grounding, DenseCaptioning, Complex };

inline constexpr std::array<TaskKind, 12> kAllTasks = {
    TaskKind::RAR, TaskKind::ECA, TaskKind::RVQ, TaskKind::TVG,
    TaskKind::EPM, TaskKind::TAL, TaskKind::EVS, TaskKind::VHD,
    TaskKind::DVC, TaskKind::SLC, TaskKind::TEM, TaskKind::GVQ};

inline constexpr std::string_view task_name(TaskKind t) {
  constexpr std::array<std::string_view, 12> names = {
      "RAR", "ECA", "RVQ", "TVG", "EPM", "TAL",
      "EVS", "VHD", "DVC", "SLC", "TEM", "GVQ"};
  return names[static_cast<std::size_t>(t)];
}

inline std::optional<TaskKind> task_from_name(std::string_view name) {
  std::string upper(name);
  for (auto &c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto t : kAllTasks)
    if (task_name(t) == upper) return t;
  return std::nullopt;
}

inline constexpr Capability capability_of(TaskKind t) {
  switch (t) {
  case TaskKind::RAR:
  case TaskKind::ECA:
  case TaskKind::RVQ:
    return Capability::Referring;
  case TaskKind::TVG:
  case TaskKind::EPM:
  case TaskKind::TAL:
  case TaskKind::EVS:
  case TaskKind::VHD:
    return Capability::Grounding;
  case TaskKind::DVC:
  case TaskKind::SLC:
    return Capability::DenseCaptioning;
  case TaskKind::TEM:
  case TaskKind::GVQ:
    return Capability::Complex;
  }
  return Capability::Complex;
}

inline constexpr std::string_view capability_name(Capability c) {
  switch (c) {
  case Capability::Referring: return "Referring";
  case Capability::Grounding: return "Grounding";
  case Capability::DenseCaptioning: return "Dense Captioning";
  case Capability::Complex: return "Complex";
  }
  return "";
}

// Ground-truth and prediction payloads.

struct McqAnswer {
  char letter = 'A';
  friend bool operator==(const McqAnswer &, const McqAnswer &) = default;
};

struct SingleInterval {
  TimeInterval interval;
  friend bool operator==(const SingleInterval &, const SingleInterval &) = default;
};

struct IntervalSet {
  std::vector<TimeInterval> intervals;
  friend bool operator==(const IntervalSet &, const IntervalSet &) = default;
};

struct HighlightRegions {
  std::vector<TimeInterval> regions;
  friend bool operator==(const HighlightRegions &, const HighlightRegions &) = default;
};

struct CaptionedSegment {
  TimeInterval interval;
  std::string caption;
  friend bool operator==(const CaptionedSegment &, const CaptionedSegment &) = default;
};

struct CaptionedSegments {
  std::vector<CaptionedSegment> segments;
  friend bool operator==(const CaptionedSegments &, const CaptionedSegments &) = default;
};

struct GroundedMcq {
  char letter = 'A';
  TimeInterval interval;
  friend bool operator==(const GroundedMcq &, const GroundedMcq &) = default;
};

/// A single predicted timestamp (highlight detection answers).
struct HighlightPoint {
  double time = 0.0;
  friend bool operator==(const HighlightPoint &, const HighlightPoint &) = default;
};

struct ParseFailure {
  std::string reason;
  friend bool operator==(const ParseFailure &, const ParseFailure &) = default;
};

using GroundTruth = std::variant<McqAnswer, SingleInterval, IntervalSet,
                                 HighlightRegions, CaptionedSegments, GroundedMcq>;

using ParsedPrediction =
    std::variant<McqAnswer, SingleInterval, IntervalSet, HighlightPoint,
                 CaptionedSegments, GroundedMcq, ParseFailure>;

struct Sample {
  std::string id;
  TaskKind task = TaskKind::RAR;
  std::string source;
  std::string video;
  double duration = 0.0;
  std::string instruction;
  GroundTruth ground_truth;
  friend bool operator==(const Sample &, const Sample &) = default;
};

struct ScoreRecord {
  std::string sample_id;
  std::map<std::string, double> values;
};

class InvariantViolation : public std::runtime_error {
public:
  InvariantViolation(std::string field, const std::string &detail)
      : std::runtime_error(field + ": " + detail), field_(std::move(field)) {}
  const std::string &field() const { return field_; }

private:
  std::string field_;
};

/// Index of the GroundTruth alternative a task must carry.
inline constexpr std::size_t expected_truth_index(TaskKind t) {
  switch (t) {
  case TaskKind::RAR:
  case TaskKind::ECA:
  case TaskKind::RVQ:
    return 0;
  case TaskKind::TVG:
  case TaskKind::EPM:
    return 1;
  case TaskKind::TAL:
  case TaskKind::EVS:
  case TaskKind::TEM:
    return 2;
  case TaskKind::VHD:
    return 3;
  case TaskKind::DVC:
  case TaskKind::SLC:
    return 4;
  case TaskKind::GVQ:
    return 5;
  }
  return 0;
}

/// Highest option letter accepted for a task's multiple-choice answer.
inline constexpr char max_letter(TaskKind t) {
  return t == TaskKind::RVQ ? 'E' : 'D';
}

inline TimeInterval clamp_interval(TimeInterval iv, double duration) {
  auto c = [duration](double x) { return std::clamp(x, 0.0, duration); };
  return {c(iv.start), c(iv.end)};
}

namespace detail {

inline void check_interval(const TimeInterval &iv, double duration,
                           const std::string &field) {
  if (!std::isfinite(iv.start) || !std::isfinite(iv.end))
    throw InvariantViolation(field, "non-finite endpoint");
  if (iv.start < 0.0) throw InvariantViolation(field, "negative start");
  if (iv.start > iv.end)
    throw InvariantViolation(field, "start > end");
  if (iv.end > duration)
    throw InvariantViolation(field, "interval exceeds video duration");
}

inline void check_letter(char letter, TaskKind task, const std::string &field) {
  if (letter < 'A' || letter > max_letter(task))
    throw InvariantViolation(field, std::string("letter out of range: ") + letter);
}

} // namespace detail

/// Returns the sample unchanged when every type invariant holds.
inline const Sample &validate_sample(const Sample &s) {
  if (s.id.empty()) throw InvariantViolation("id", "empty");
  if (!(std::isfinite(s.duration) && s.duration > 0.0))
    throw InvariantViolation("duration", "must be positive and finite");
  if (s.ground_truth.index() != expected_truth_index(s.task))
    throw InvariantViolation("ground_truth", "variant does not match task " +
                                                 std::string(task_name(s.task)));
  std::visit(
      [&](const auto &gt) {
        using T = std::decay_t<decltype(gt)>;
        if constexpr (std::is_same_v<T, McqAnswer>) {
          detail::check_letter(gt.letter, s.task, "ground_truth.answer");
        } else if constexpr (std::is_same_v<T, SingleInterval>) {
          detail::check_interval(gt.interval, s.duration, "ground_truth.interval");
        } else if constexpr (std::is_same_v<T, IntervalSet>) {
          if (gt.intervals.empty())
            throw InvariantViolation("ground_truth.intervals", "empty");
          for (const auto &iv : gt.intervals)
            detail::check_interval(iv, s.duration, "ground_truth.intervals");
        } else if constexpr (std::is_same_v<T, HighlightRegions>) {
          if (gt.regions.empty())
            throw InvariantViolation("ground_truth.regions", "empty");
          for (const auto &iv : gt.regions)
            detail::check_interval(iv, s.duration, "ground_truth.regions");
        } else if constexpr (std::is_same_v<T, CaptionedSegments>) {
          if (gt.segments.empty())
            throw InvariantViolation("ground_truth.segments", "empty");
          for (const auto &seg : gt.segments)
            detail::check_interval(seg.interval, s.duration, "ground_truth.segments");
        } else if constexpr (std::is_same_v<T, GroundedMcq>) {
          detail::check_letter(gt.letter, s.task, "ground_truth.answer");
          detail::check_interval(gt.interval, s.duration, "ground_truth.interval");
        }
      },
      s.ground_truth);
  return s;
}

inline bool is_failure(const ParsedPrediction &p) {
  return std::holds_alternative<ParseFailure>(p);
}

} // namespace etbench
