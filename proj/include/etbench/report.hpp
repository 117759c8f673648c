#pragma once

// Aggregation of per-sample scores: sample -> (task, source) mean -> task
// mean (unweighted over sources) -> capability mean (unweighted over tasks).
// Values stay as fractions internally; emission prints percentages with one
// decimal.

#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "domain.hpp"
#include "evaluate.hpp"

namespace etbench {

class UnknownSample : public std::runtime_error {
public:
  explicit UnknownSample(const std::string &id)
      : std::runtime_error("score record for unknown sample: " + id), id_(id) {}
  const std::string &id() const { return id_; }

private:
  std::string id_;
};

using SubtaskKey = std::pair<TaskKind, std::string>; // (task, source)
using MetricMap = std::map<std::string, double>;

struct ReportColumn {
  TaskKind task;
  std::string metric;
  std::string label;
};

/// The main table's 14 metric columns, grouped referring / grounding /
/// dense captioning / complex.
inline const std::vector<ReportColumn> &report_columns() {
  static const std::vector<ReportColumn> cols = {
      {TaskKind::RAR, "acc", "RAR Acc"},     {TaskKind::ECA, "acc", "ECA Acc"},
      {TaskKind::RVQ, "acc", "RVQ Acc"},     {TaskKind::TVG, "f1", "TVG F1"},
      {TaskKind::EPM, "f1", "EPM F1"},       {TaskKind::TAL, "f1", "TAL F1"},
      {TaskKind::EVS, "f1", "EVS F1"},       {TaskKind::VHD, "f1", "VHD F1"},
      {TaskKind::DVC, "f1", "DVC F1"},       {TaskKind::DVC, "sim", "DVC Sim"},
      {TaskKind::SLC, "f1", "SLC F1"},       {TaskKind::SLC, "sim", "SLC Sim"},
      {TaskKind::TEM, "recall", "TEM Rec"},  {TaskKind::GVQ, "recall", "GVQ Rec"},
  };
  return cols;
}

struct CapabilityDef {
  std::string name;
  std::string metric;
  std::vector<TaskKind> tasks;
};

inline const std::vector<CapabilityDef> &capability_defs() {
  static const std::vector<CapabilityDef> defs = {
      {"Acc_ref", "acc", {TaskKind::RAR, TaskKind::ECA, TaskKind::RVQ}},
      {"F1_gnd", "f1", {TaskKind::TVG, TaskKind::EPM, TaskKind::TAL, TaskKind::EVS, TaskKind::VHD}},
      {"F1_cap", "f1", {TaskKind::DVC, TaskKind::SLC}},
      {"Sim_cap", "sim", {TaskKind::DVC, TaskKind::SLC}},
      {"Rec_com", "recall", {TaskKind::TEM, TaskKind::GVQ}},
  };
  return defs;
}

struct AggregateReport {
  std::map<SubtaskKey, MetricMap> subtask_means;
  std::map<TaskKind, MetricMap> task_means;
  std::map<std::string, double> capability_means;
  std::map<SubtaskKey, std::size_t> subtask_counts;

  std::optional<double> task_metric(TaskKind t, const std::string &metric) const {
    auto it = task_means.find(t);
    if (it == task_means.end()) return std::nullopt;
    auto m = it->second.find(metric);
    if (m == it->second.end()) return std::nullopt;
    return m->second;
  }

  bool empty() const { return subtask_means.empty(); }
};

inline double mean_of(const std::vector<double> &v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Task and capability levels from sub-task means. A metric missing for a
/// source is left out of that task's mean rather than counted as zero.
inline AggregateReport aggregate_subtask_means(std::map<SubtaskKey, MetricMap> subtask_means) {
  AggregateReport rep;
  rep.subtask_means = std::move(subtask_means);
  std::map<TaskKind, std::map<std::string, std::vector<double>>> per_task;
  for (const auto &[key, metrics] : rep.subtask_means)
    for (const auto &[name, v] : metrics) per_task[key.first][name].push_back(v);
  for (const auto &[task, metrics] : per_task)
    for (const auto &[name, vals] : metrics) rep.task_means[task][name] = mean_of(vals);
  for (const auto &cap : capability_defs()) {
    std::vector<double> vals;
    for (TaskKind t : cap.tasks)
      if (auto v = rep.task_metric(t, cap.metric)) vals.push_back(*v);
    if (!vals.empty()) rep.capability_means[cap.name] = mean_of(vals);
  }
  return rep;
}

inline AggregateReport aggregate(const std::vector<ScoreRecord> &records,
                                 const std::vector<Sample> &manifest) {
  std::unordered_map<std::string, const Sample *> by_id;
  for (const auto &s : manifest) by_id[s.id] = &s;
  std::map<SubtaskKey, std::map<std::string, std::pair<double, std::size_t>>> sums;
  std::map<SubtaskKey, std::size_t> counts;
  for (const auto &r : records) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) throw UnknownSample(r.sample_id);
    const SubtaskKey key{it->second->task, it->second->source};
    ++counts[key];
    for (const auto &[name, v] : r.values) {
      auto &acc = sums[key][name];
      acc.first += v;
      ++acc.second;
    }
  }
  std::map<SubtaskKey, MetricMap> means;
  for (const auto &[key, metrics] : sums)
    for (const auto &[name, acc] : metrics)
      means[key][name] = acc.first / static_cast<double>(acc.second);
  auto rep = aggregate_subtask_means(std::move(means));
  rep.subtask_counts = std::move(counts);
  return rep;
}

// ---------------------------------------------------------------------------
// Per-threshold rows

struct ThresholdRow {
  std::vector<double> thresholds;
  std::vector<double> values;
  double mean = 0.0;
};

inline ThresholdRow make_threshold_row(std::vector<double> thresholds, std::vector<double> values) {
  if (thresholds.size() != values.size())
    throw std::invalid_argument("threshold row: value count differs from threshold count");
  ThresholdRow row{std::move(thresholds), std::move(values), 0.0};
  row.mean = mean_of(row.values);
  return row;
}

inline std::string threshold_metric(TaskKind task) {
  switch (capability_of(task)) {
  case Capability::Complex: return "recall";
  case Capability::Referring: return "acc";
  default: return "f1";
  }
}

/// F1 (or recall) at each IoU threshold for one task; nullopt when the task
/// has no threshold data.
inline std::optional<ThresholdRow> per_threshold_row(const AggregateReport &rep, TaskKind task,
                                                     const IoUThresholds &thetas = {}) {
  const std::string metric = threshold_metric(task);
  std::vector<double> th, vals;
  for (double t : thetas) {
    auto v = rep.task_metric(task, threshold_key(metric, t));
    if (!v) return std::nullopt;
    th.push_back(t);
    vals.push_back(*v);
  }
  return make_threshold_row(std::move(th), std::move(vals));
}

// ---------------------------------------------------------------------------
// Emission

enum class ReportFormat { Markdown, Csv };

inline std::optional<ReportFormat> report_format_from_name(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

inline std::string format_percent(std::optional<double> v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v * 100.0);
  return buf;
}

namespace detail {

inline std::string table(const std::vector<std::string> &header,
                         const std::vector<std::vector<std::string>> &rows, ReportFormat fmt) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string> &cells) {
    if (fmt == ReportFormat::Csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    } else {
      os << "|";
      for (const auto &c : cells) os << ' ' << c << " |";
    }
    os << '\n';
  };
  line(header);
  if (fmt == ReportFormat::Markdown) {
    os << "|";
    for (std::size_t i = 0; i < header.size(); ++i) os << " --- |";
    os << '\n';
  }
  for (const auto &r : rows) line(r);
  return os.str();
}

} // namespace detail

/// Main table: one header row plus one value row (omitted when empty).
inline std::string emit(const AggregateReport &rep, ReportFormat fmt) {
  std::vector<std::string> header, row;
  for (const auto &c : report_columns()) {
    header.push_back(c.label);
    row.push_back(format_percent(rep.task_metric(c.task, c.metric)));
  }
  std::vector<std::vector<std::string>> rows;
  if (!rep.empty()) rows.push_back(row);
  return detail::table(header, rows, fmt);
}

inline std::string emit_capabilities(const AggregateReport &rep, ReportFormat fmt) {
  std::vector<std::string> header, row;
  for (const auto &cap : capability_defs()) {
    header.push_back(cap.name);
    auto it = rep.capability_means.find(cap.name);
    row.push_back(format_percent(it == rep.capability_means.end()
                                     ? std::nullopt
                                     : std::optional<double>(it->second)));
  }
  std::vector<std::vector<std::string>> rows;
  if (!rep.empty()) rows.push_back(row);
  return detail::table(header, rows, fmt);
}

/// One row per (task, source) with its main metric and sample count.
inline std::string emit_subtasks(const AggregateReport &rep, ReportFormat fmt) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &c : report_columns()) {
    for (const auto &[key, metrics] : rep.subtask_means) {
      if (key.first != c.task) continue;
      auto it = metrics.find(c.metric);
      auto n = rep.subtask_counts.find(key);
      rows.push_back({c.label, key.second,
                      format_percent(it == metrics.end() ? std::nullopt
                                                         : std::optional<double>(it->second)),
                      n == rep.subtask_counts.end() ? "--" : std::to_string(n->second)});
    }
  }
  return detail::table({"Metric", "Source", "Value", "Samples"}, rows, fmt);
}

/// Per-threshold rows for every grounding and complex task with data.
inline std::string emit_thresholds(const AggregateReport &rep, ReportFormat fmt,
                                   const IoUThresholds &thetas = {}) {
  std::vector<std::string> header{"Task"};
  for (double t : thetas) header.push_back(threshold_key("IoU", t));
  header.push_back("Mean");
  std::vector<std::vector<std::string>> rows;
  for (TaskKind t : kAllTasks) {
    if (capability_of(t) == Capability::Referring) continue;
    auto row = per_threshold_row(rep, t, thetas);
    if (!row) continue;
    std::vector<std::string> cells{std::string(task_name(t))};
    for (double v : row->values) cells.push_back(format_percent(v));
    cells.push_back(format_percent(row->mean));
    rows.push_back(std::move(cells));
  }
  return detail::table(header, rows, fmt);
}

} // namespace etbench
