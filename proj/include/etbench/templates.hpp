#pragma once

// Instruction and canonical-response rendering from the template corpus
// (data/templates.json, embedded at build time).
//
// Template syntax: `{name}` substitutes a text placeholder, `{times[i]}` the
// i-th time formatted with one decimal, and `{options}` expands to
// "(A) first (B) second ...". Any other brace is literal.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "etbench/template_corpus_data.hpp"

namespace etbench {

class MissingPlaceholder : public std::runtime_error {
public:
  explicit MissingPlaceholder(std::string name)
      : std::runtime_error("missing placeholder: " + name), name_(std::move(name)) {}
  const std::string &name() const { return name_; }

private:
  std::string name_;
};

class VariantMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class UnknownTemplate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class TemplateFamily { Benchmark, Tuning };

struct TemplateId {
  TemplateFamily family = TemplateFamily::Benchmark;
  TaskKind task = TaskKind::TVG;
  int variant = 0;

  std::string key() const {
    return std::string(family == TemplateFamily::Benchmark ? "bench/" : "tune/") +
           std::string(task_name(task)) + "/" + std::to_string(variant);
  }
};

struct Placeholders {
  std::map<std::string, std::string> text; // query, question, action, task, domain
  std::vector<std::string> options;
  std::vector<double> times;
};

/// One decimal place, no unit.
inline std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", t);
  return buf;
}

/// Candidate expression for the `domain` placeholder of the benchmark
/// templates, keyed by task and source dataset:
///   TVG: qvhighlights -> "daily activities", charades_sta -> "indoor activities"
///   VHD: qvhighlights -> "the sentence", youtube_highlights -> "its domain"
///   TEM: qvhighlights -> "about daily activities",
///        perception_test -> "containing a series of actions"
/// EVS takes the source video's own domain label, so it has no entry here.
inline std::optional<std::string> domain_phrase(TaskKind task, std::string_view source) {
  static const std::map<std::pair<TaskKind, std::string>, std::string> table = {
      {{TaskKind::TVG, "qvhighlights"}, "daily activities"},
      {{TaskKind::TVG, "charades_sta"}, "indoor activities"},
      {{TaskKind::VHD, "qvhighlights"}, "the sentence"},
      {{TaskKind::VHD, "youtube_highlights"}, "its domain"},
      {{TaskKind::TEM, "qvhighlights"}, "about daily activities"},
      {{TaskKind::TEM, "perception_test"}, "containing a series of actions"},
  };
  if (auto it = table.find({task, std::string(source)}); it != table.end()) return it->second;
  return std::nullopt;
}

namespace detail {

inline bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_';
}

/// Substitutes placeholders; `lookup` returns nullopt for unknown names.
template <typename Lookup>
std::string substitute(std::string_view tpl, Lookup &&lookup) {
  std::string out;
  out.reserve(tpl.size() + 64);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && is_name_char(tpl[j])) ++j;
      std::optional<std::size_t> index;
      std::size_t k = j;
      if (j > i + 1 && k < tpl.size() && tpl[k] == '[') {
        std::size_t d = k + 1;
        std::size_t v = 0;
        while (d < tpl.size() && tpl[d] >= '0' && tpl[d] <= '9') v = v * 10 + (tpl[d++] - '0');
        if (d > k + 1 && d < tpl.size() && tpl[d] == ']') {
          index = v;
          k = d + 1;
        }
      }
      if (j > i + 1 && k < tpl.size() && tpl[k] == '}') {
        const std::string name(tpl.substr(i + 1, j - i - 1));
        out += lookup(name, index);
        i = k + 1;
        continue;
      }
    }
    out.push_back(tpl[i++]);
  }
  return out;
}

inline std::string join_intervals(const std::vector<TimeInterval> &ivs) {
  std::vector<std::string> parts;
  for (const auto &iv : ivs) parts.push_back(format_time(iv.start) + " - " + format_time(iv.end));
  if (parts.empty()) return "";
  if (parts.size() == 1) return parts[0];
  if (parts.size() == 2) return parts[0] + " and " + parts[1];
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i + 1 == parts.size()) out += "and ";
    out += parts[i];
    if (i + 1 < parts.size()) out += ", ";
  }
  return out;
}

} // namespace detail

class TemplateCorpus {
public:
  static TemplateCorpus from_json(const nlohmann::json &j) {
    TemplateCorpus c;
    c.version_ = j.value("version", "");
    for (const auto &[k, v] : j.at("templates").items()) c.templates_[k] = v.get<std::string>();
    return c;
  }

  static TemplateCorpus load(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template corpus: " + path);
    return from_json(nlohmann::json::parse(in));
  }

  static const TemplateCorpus &builtin() {
    static const TemplateCorpus c = from_json(nlohmann::json::parse(kBuiltinTemplateCorpus));
    return c;
  }

  const std::string &version() const { return version_; }
  const std::map<std::string, std::string> &entries() const { return templates_; }

  bool contains(const std::string &key) const { return templates_.count(key) > 0; }

  const std::string &at(const std::string &key) const {
    auto it = templates_.find(key);
    if (it == templates_.end()) throw UnknownTemplate("no template: " + key);
    return it->second;
  }

  std::size_t variant_count(TemplateFamily f, TaskKind t) const {
    std::size_t n = 0;
    while (contains(TemplateId{f, t, static_cast<int>(n)}.key())) ++n;
    return n;
  }

  std::string render_instruction(const TemplateId &id, const Placeholders &ph) const {
    return detail::substitute(at(id.key()), [&](const std::string &name,
                                                std::optional<std::size_t> idx) -> std::string {
      if (name == "options" && !idx) {
        if (ph.options.empty()) throw MissingPlaceholder("options");
        std::string s;
        for (std::size_t i = 0; i < ph.options.size(); ++i) {
          if (i) s += ' ';
          s += '(';
          s += static_cast<char>('A' + i);
          s += ") " + ph.options[i];
        }
        return s;
      }
      if (name == "times") {
        const std::size_t i = idx.value_or(0);
        if (i >= ph.times.size())
          throw MissingPlaceholder("times[" + std::to_string(i) + "]");
        return format_time(ph.times[i]);
      }
      auto it = ph.text.find(name);
      if (it == ph.text.end() || idx) throw MissingPlaceholder(name);
      return it->second;
    });
  }

  /// Canonical response text for a ground truth. Highlight regions render as
  /// the midpoint of the first region.
  std::string render_response(TaskKind task, const GroundTruth &gt) const {
    if (gt.index() != expected_truth_index(task))
      throw VariantMismatch("ground truth variant does not match task " +
                            std::string(task_name(task)));
    const std::string key = "response/" + std::string(task_name(task));
    std::map<std::string, std::string> vals;
    std::visit(
        [&](const auto &v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, McqAnswer>) {
            vals["choice"] = std::string(1, v.letter);
          } else if constexpr (std::is_same_v<T, SingleInterval>) {
            vals["intervals"] = detail::join_intervals({v.interval});
          } else if constexpr (std::is_same_v<T, IntervalSet>) {
            // Single-boundary answers carry only the first interval.
            vals["intervals"] = task == TaskKind::TEM
                                    ? detail::join_intervals({v.intervals.front()})
                                    : detail::join_intervals(v.intervals);
          } else if constexpr (std::is_same_v<T, HighlightRegions>) {
            const auto &r = v.regions.front();
            vals["time"] = format_time(0.5 * (r.start + r.end));
          } else if constexpr (std::is_same_v<T, CaptionedSegments>) {
            std::string segs;
            for (const auto &s : v.segments) {
              if (!segs.empty()) segs += ' ';
              segs += render_segment(s);
            }
            vals["segments"] = segs;
          } else if constexpr (std::is_same_v<T, GroundedMcq>) {
            vals["choice"] = std::string(1, v.letter);
            vals["intervals"] = detail::join_intervals({v.interval});
          }
        },
        gt);
    return detail::substitute(at(key), [&](const std::string &name, auto) {
      auto it = vals.find(name);
      if (it == vals.end()) throw MissingPlaceholder(name);
      return it->second;
    });
  }

  std::string render_segment(const CaptionedSegment &s) const {
    return detail::substitute(at("response/segment"), [&](const std::string &name, auto) {
      if (name == "start") return format_time(s.interval.start);
      if (name == "end") return format_time(s.interval.end);
      if (name == "caption") return s.caption;
      throw MissingPlaceholder(name);
    });
  }

private:
  std::string version_;
  std::map<std::string, std::string> templates_;
};

inline std::string render_instruction(const TemplateId &id, const Placeholders &ph) {
  return TemplateCorpus::builtin().render_instruction(id, ph);
}

inline std::string render_response(TaskKind task, const GroundTruth &gt) {
  return TemplateCorpus::builtin().render_response(task, gt);
}

} // namespace etbench
