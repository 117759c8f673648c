#pragma once

// Rule-based extraction of structured answers from free-text responses.
//
// All parsers are total: any byte string yields a value or a ParseFailure.
// Failure reason codes: "no-choice", "no-intervals", "no-point", "no-segments".

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "domain.hpp"

namespace etbench {

template <typename T> using ParseResult = std::variant<T, ParseFailure>;

template <typename T> bool ok(const ParseResult<T> &r) {
  return std::holds_alternative<T>(r);
}

struct ParseConfig {
  std::size_t max_intervals = 10;
  bool clamp_to_duration = true;
  /// Overrides of the default allowed letters (A-D, or A-E for RVQ).
  std::map<TaskKind, std::string> mcq_letters;

  std::string letters_for(TaskKind t) const {
    if (auto it = mcq_letters.find(t); it != mcq_letters.end()) return it->second;
    return t == TaskKind::RVQ ? "ABCDE" : "ABCD";
  }
};

namespace lex {

enum class Kind { Number, Word, Dash, Other };

struct Token {
  Kind kind;
  std::size_t begin; // byte offsets into the source text
  std::size_t end;
  double value = 0.0;  // Number
  std::string word;    // Word, lowercased
};

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Byte length of a dash at `i` (ASCII hyphen, en/em dash, minus sign), else 0.
inline std::size_t dash_length(std::string_view s, std::size_t i) {
  if (s[i] == '-') return 1;
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2) {
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    const auto b2 = static_cast<unsigned char>(s[i + 2]);
    if (b1 == 0x80 && (b2 == 0x93 || b2 == 0x94)) return 3;
    if (b1 == 0x88 && b2 == 0x92) return 3;
  }
  return 0;
}

inline double to_double(std::string_view digits) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc()) return std::numeric_limits<double>::infinity();
  return v;
}

/// Scans a number starting at a digit: `d+ (:dd){0,2} (.d+)?`.
/// Clock forms ("1:23", "1:02:03") are converted to seconds.
inline std::size_t scan_number(std::string_view s, std::size_t i, double &value) {
  const std::size_t n = s.size();
  std::size_t j = i;
  while (j < n && is_digit(s[j])) ++j;
  double clock = 0.0;
  std::size_t last = i; // start of the final (seconds) field
  int groups = 0;
  for (; groups < 2; ++groups) {
    if (!(j + 1 < n && s[j] == ':' && is_digit(s[j + 1]))) break;
    std::size_t k = j + 1;
    while (k < n && is_digit(s[k]) && k - (j + 1) < 2) ++k;
    if (k < n && is_digit(s[k])) break; // three digits after ':' is not a clock
    clock = (clock + to_double(s.substr(last, j - last))) * 60.0;
    last = j + 1;
    j = k;
  }
  if (j + 1 < n && s[j] == '.' && is_digit(s[j + 1])) {
    ++j;
    while (j < n && is_digit(s[j])) ++j;
  }
  value = clock + to_double(s.substr(last, j - last));
  return j;
}

inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
    } else if (is_digit(c)) {
      Token t{Kind::Number, i, i, 0.0, {}};
      t.end = scan_number(s, i, t.value);
      out.push_back(std::move(t));
      i = out.back().end;
    } else if (is_alpha(c)) {
      std::size_t j = i;
      while (j < n && is_alnum(s[j])) ++j;
      Token t{Kind::Word, i, j, 0.0, {}};
      t.word.reserve(j - i);
      for (std::size_t k = i; k < j; ++k)
        t.word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[k]))));
      out.push_back(std::move(t));
      i = j;
    } else if (std::size_t dl = dash_length(s, i); dl > 0) {
      out.push_back(Token{Kind::Dash, i, i + dl, 0.0, {}});
      i += dl;
    } else {
      out.push_back(Token{Kind::Other, i, i + 1, 0.0, {}});
      ++i;
    }
  }
  return out;
}

inline bool is_unit(const Token &t) {
  return t.kind == Kind::Word &&
         (t.word == "s" || t.word == "sec" || t.word == "secs" ||
          t.word == "second" || t.word == "seconds");
}

struct Pair {
  double a;
  double b;
  std::size_t begin; // byte range covered, including trailing unit words
  std::size_t end;
};

/// Tries to match `num [unit] (dash|"to") num [unit]` at token index i.
inline bool match_pair(const std::vector<Token> &toks, std::size_t i, Pair &out,
                       std::size_t &next) {
  const std::size_t n = toks.size();
  if (i >= n || toks[i].kind != Kind::Number) return false;
  std::size_t j = i + 1;
  if (j < n && is_unit(toks[j])) ++j;
  if (j >= n) return false;
  if (!(toks[j].kind == Kind::Dash ||
        (toks[j].kind == Kind::Word && toks[j].word == "to")))
    return false;
  ++j;
  if (j >= n || toks[j].kind != Kind::Number) return false;
  const std::size_t second = j++;
  if (j < n && is_unit(toks[j])) ++j;
  out = Pair{toks[i].value, toks[second].value, toks[i].begin, toks[j - 1].end};
  next = j;
  return true;
}

inline std::vector<Pair> find_pairs(const std::vector<Token> &toks) {
  std::vector<Pair> pairs;
  std::size_t i = 0;
  while (i < toks.size()) {
    Pair p{};
    std::size_t next = 0;
    if (match_pair(toks, i, p, next)) {
      pairs.push_back(p);
      i = next;
    } else {
      ++i;
    }
  }
  return pairs;
}

} // namespace lex

namespace detail {

inline char upper(char c) {
  return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

inline bool allowed(char c, std::string_view letters) {
  return letters.find(c) != std::string_view::npos;
}

/// Normalizes a raw pair; returns false when it must be dropped.
inline bool accept_pair(double a, double b, double duration, const ParseConfig &cfg,
                        TimeInterval &out) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  TimeInterval iv{a, b};
  if (cfg.clamp_to_duration) iv = clamp_interval(iv, duration);
  if (iv.start > iv.end) return false;
  out = iv;
  return true;
}

inline std::string_view trim_caption(std::string_view s) {
  auto lead = [](char c) {
    return lex::is_space(c) || c == ',' || c == ':' || c == ';' || c == '-';
  };
  std::size_t b = 0;
  while (b < s.size()) {
    if (lead(s[b])) {
      ++b;
    } else if (std::size_t dl = lex::dash_length(s, b); dl > 0) {
      b += dl;
    } else {
      break;
    }
  }
  std::size_t e = s.size();
  while (e > b && lex::is_space(s[e - 1])) --e;
  // A line-leading list marker ("\n2." or "\n2)") that belongs to the next item.
  std::size_t k = e;
  if (k > b && (s[k - 1] == '.' || s[k - 1] == ')')) {
    std::size_t d = k - 1;
    while (d > b && lex::is_digit(s[d - 1])) --d;
    if (d < k - 1 && d > b && s[d - 1] == '\n') {
      e = d;
      while (e > b && lex::is_space(s[e - 1])) --e;
    }
  }
  return s.substr(b, e - b);
}

} // namespace detail

/// Extracts a multiple-choice letter.
/// Order: canonical "Best Option: (X)", then the first "(X)", then the first
/// standalone capital letter; each must belong to `allowed_letters`.
inline ParseResult<char> parse_mcq(std::string_view text, std::string_view allowed_letters) {
  using lex::is_alnum;
  using lex::is_space;
  const std::size_t n = text.size();

  auto ieq = [&](std::size_t at, std::string_view word) {
    if (at + word.size() > n) return false;
    for (std::size_t k = 0; k < word.size(); ++k)
      if (std::tolower(static_cast<unsigned char>(text[at + k])) != word[k]) return false;
    return true;
  };
  auto skip_ws = [&](std::size_t at) {
    while (at < n && is_space(text[at])) ++at;
    return at;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (!ieq(i, "best") || (i > 0 && is_alnum(text[i - 1]))) continue;
    std::size_t j = skip_ws(i + 4);
    if (!ieq(j, "option")) continue;
    j += 6;
    if (j < n && (text[j] == 's' || text[j] == 'S')) ++j;
    j = skip_ws(j);
    if (j < n && text[j] == ':') j = skip_ws(j + 1);
    bool paren = false;
    if (j < n && text[j] == '(') {
      paren = true;
      j = skip_ws(j + 1);
    }
    if (j >= n || !lex::is_alpha(text[j])) continue;
    const char letter = detail::upper(text[j]);
    std::size_t k = j + 1;
    if (k < n && is_alnum(text[k])) continue;
    if (paren) {
      k = skip_ws(k);
      if (k >= n || text[k] != ')') continue;
    }
    if (detail::allowed(letter, allowed_letters)) return letter;
  }

  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (text[i] == '(' && text[i + 2] == ')' &&
        detail::allowed(text[i + 1], allowed_letters))
      return text[i + 1];
  }

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (!detail::allowed(c, allowed_letters) || !(c >= 'A' && c <= 'Z')) continue;
    const bool left = i == 0 || !is_alnum(text[i - 1]);
    const bool right = i + 1 == n || !is_alnum(text[i + 1]);
    if (left && right) return c;
  }
  return ParseFailure{"no-choice"};
}

inline ParseResult<std::vector<TimeInterval>>
parse_intervals(std::string_view text, double duration, const ParseConfig &cfg = {}) {
  std::vector<TimeInterval> out;
  for (const auto &p : lex::find_pairs(lex::tokenize(text))) {
    if (out.size() >= cfg.max_intervals) break;
    TimeInterval iv;
    if (detail::accept_pair(p.a, p.b, duration, cfg, iv)) out.push_back(iv);
  }
  if (out.empty()) return ParseFailure{"no-intervals"};
  return out;
}

/// First number after the word "at"; otherwise the first number followed by a
/// seconds unit. Clamped to [0, duration].
inline ParseResult<double> parse_point(std::string_view text, double duration) {
  const auto toks = lex::tokenize(text);
  auto finish = [&](double v) -> ParseResult<double> {
    if (!std::isfinite(v)) return ParseFailure{"no-point"};
    return std::clamp(v, 0.0, duration);
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != lex::Kind::Word || toks[i].word != "at") continue;
    for (std::size_t j = i + 1; j < toks.size(); ++j)
      if (toks[j].kind == lex::Kind::Number) return finish(toks[j].value);
    break;
  }
  for (std::size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i].kind == lex::Kind::Number && lex::is_unit(toks[i + 1]))
      return finish(toks[i].value);
  return ParseFailure{"no-point"};
}

/// Splits the response at each time pair; a segment's caption is the text up
/// to the next pair.
inline ParseResult<std::vector<CaptionedSegment>>
parse_captioned(std::string_view text, double duration, const ParseConfig &cfg = {}) {
  const auto pairs = lex::find_pairs(lex::tokenize(text));
  std::vector<CaptionedSegment> out;
  for (std::size_t k = 0; k < pairs.size() && out.size() < cfg.max_intervals; ++k) {
    TimeInterval iv;
    if (!detail::accept_pair(pairs[k].a, pairs[k].b, duration, cfg, iv)) continue;
    const std::size_t cap_begin = pairs[k].end;
    const std::size_t cap_end = k + 1 < pairs.size() ? pairs[k + 1].begin : text.size();
    out.push_back({iv, std::string(detail::trim_caption(
                           text.substr(cap_begin, cap_end - cap_begin)))});
  }
  if (out.empty()) return ParseFailure{"no-segments"};
  return out;
}

inline ParseResult<GroundedMcq> parse_grounded(std::string_view text, double duration,
                                               std::string_view allowed_letters = "ABCD",
                                               const ParseConfig &cfg = {}) {
  auto letter = parse_mcq(text, allowed_letters);
  if (!ok(letter)) return std::get<ParseFailure>(letter);
  auto ivs = parse_intervals(text, duration, cfg);
  if (!ok(ivs)) return std::get<ParseFailure>(ivs);
  return GroundedMcq{std::get<char>(letter), std::get<0>(ivs).front()};
}

/// Dispatches to the task's parser. Single-boundary tasks (TVG, EPM, TEM)
/// keep only the first interval.
inline ParsedPrediction parse_for_task(TaskKind task, std::string_view text,
                                       double duration, const ParseConfig &cfg = {}) {
  switch (task) {
  case TaskKind::RAR:
  case TaskKind::ECA:
  case TaskKind::RVQ: {
    auto r = parse_mcq(text, cfg.letters_for(task));
    if (!ok(r)) return std::get<ParseFailure>(r);
    return McqAnswer{std::get<char>(r)};
  }
  case TaskKind::TVG:
  case TaskKind::EPM:
  case TaskKind::TEM: {
    auto r = parse_intervals(text, duration, cfg);
    if (!ok(r)) return std::get<ParseFailure>(r);
    return SingleInterval{std::get<0>(r).front()};
  }
  case TaskKind::TAL:
  case TaskKind::EVS: {
    auto r = parse_intervals(text, duration, cfg);
    if (!ok(r)) return std::get<ParseFailure>(r);
    return IntervalSet{std::move(std::get<0>(r))};
  }
  case TaskKind::VHD: {
    auto r = parse_point(text, duration);
    if (!ok(r)) return std::get<ParseFailure>(r);
    return HighlightPoint{std::get<double>(r)};
  }
  case TaskKind::DVC:
  case TaskKind::SLC: {
    auto r = parse_captioned(text, duration, cfg);
    if (!ok(r)) return std::get<ParseFailure>(r);
    return CaptionedSegments{std::move(std::get<0>(r))};
  }
  case TaskKind::GVQ: {
    auto r = parse_grounded(text, duration, cfg.letters_for(task), cfg);
    if (!ok(r)) return std::get<ParseFailure>(r);
    return std::get<GroundedMcq>(r);
  }
  }
  return ParseFailure{"unknown-task"};
}

} // namespace etbench
