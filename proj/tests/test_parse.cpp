#include <gtest/gtest.h>

#include <etbench/parse.hpp>
#include <etbench/rng.hpp>

using namespace etbench;

namespace {

template <typename T> const T &value(const ParseResult<T> &r) {
  EXPECT_TRUE(ok(r)) << std::get<ParseFailure>(r).reason;
  return std::get<T>(r);
}

template <typename T> std::string failure(const ParseResult<T> &r) {
  if (ok(r)) return "";
  return std::get<ParseFailure>(r).reason;
}

std::vector<TimeInterval> ivs(std::string_view text, double d, ParseConfig cfg = {}) {
  auto r = parse_intervals(text, d, cfg);
  return ok(r) ? std::get<0>(r) : std::vector<TimeInterval>{};
}

void expect_intervals(const std::vector<TimeInterval> &got,
                      const std::vector<TimeInterval> &want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_DOUBLE_EQ(got[i].start, want[i].start) << i;
    EXPECT_DOUBLE_EQ(got[i].end, want[i].end) << i;
  }
}

} // namespace

TEST(Mcq, Canonical) { EXPECT_EQ(value(parse_mcq("Best Option: (A)", "ABCD")), 'A'); }

TEST(Mcq, CanonicalIsCaseAndSpaceTolerant) {
  EXPECT_EQ(value(parse_mcq("best   option :( b )", "ABCD")), 'B');
  EXPECT_EQ(value(parse_mcq("Best Option: C", "ABCD")), 'C');
}

TEST(Mcq, ParenthesizedFallback) {
  EXPECT_EQ(value(parse_mcq("I think the answer is (C) because of (A)", "ABCD")), 'C');
}

TEST(Mcq, StandaloneLetterFallback) {
  EXPECT_EQ(value(parse_mcq("Answer: D. Also maybe B.", "ABCD")), 'D');
}

TEST(Mcq, NoChoice) {
  EXPECT_EQ(failure(parse_mcq("The video shows cooking.", "ABCD")), "no-choice");
  // E is not an allowed letter outside RVQ
  EXPECT_EQ(failure(parse_mcq("Best Option: (E)", "ABCD")), "no-choice");
  EXPECT_EQ(value(parse_mcq("Best Option: (E)", "ABCDE")), 'E');
}

TEST(Mcq, CanonicalBeatsEarlierParenthesized) {
  EXPECT_EQ(value(parse_mcq("Options (A) and (B). Best Option: (B)", "ABCD")), 'B');
}

TEST(Intervals, TableExampleList) {
  expect_intervals(
      ivs("The action happens in 4.2 - 6.8, 7.5 - 10.3, 15.1 - 18.6, and 23.4 - 27.5 seconds", 60),
      {{4.2, 6.8}, {7.5, 10.3}, {15.1, 18.6}, {23.4, 27.5}});
}

TEST(Intervals, Single) {
  expect_intervals(ivs("The event happens in 10.2 - 12.8 seconds", 60), {{10.2, 12.8}});
}

TEST(Intervals, ClampsToDuration) {
  expect_intervals(ivs("happens in 90 - 102 seconds", 95), {{90, 95}});
}

TEST(Intervals, DropsReversedAfterClamp) {
  expect_intervals(ivs("12 - 8 and 1 - 2", 60), {{1, 2}});
  // clamps to a zero-length interval, which is kept
  expect_intervals(ivs("100 - 120, 3 - 4", 95), {{95, 95}, {3, 4}});
}

TEST(Intervals, NoClampKeepsRawButStillDropsReversed) {
  ParseConfig cfg;
  cfg.clamp_to_duration = false;
  expect_intervals(ivs("90 - 102", 95, cfg), {{90, 102}});
}

TEST(Intervals, DashVariantsUnitsAndTo) {
  expect_intervals(ivs("from 3s to 5s", 60), {{3, 5}});
  expect_intervals(ivs("3\xE2\x80\x93" "5 and 6 \xE2\x80\x94 7 seconds", 60), {{3, 5}, {6, 7}});
  expect_intervals(ivs("4 sec - 9 secs", 60), {{4, 9}});
}

TEST(Intervals, ClockTimes) {
  expect_intervals(ivs("1:23 - 1:30", 600), {{83, 90}});
  expect_intervals(ivs("0:59.5 - 1:02:03", 5000), {{59.5, 3723}});
}

TEST(Intervals, TruncatesToMax) {
  std::string text;
  for (int i = 0; i < 15; ++i) text += std::to_string(i) + " - " + std::to_string(i + 1) + ", ";
  EXPECT_EQ(ivs(text, 100).size(), 10u);
  ParseConfig cfg;
  cfg.max_intervals = 3;
  EXPECT_EQ(ivs(text, 100, cfg).size(), 3u);
}

TEST(Intervals, NoIntervals) {
  EXPECT_EQ(failure(parse_intervals("nothing here 42", 60)), "no-intervals");
  EXPECT_EQ(failure(parse_intervals("", 60)), "no-intervals");
}

TEST(Point, Examples) {
  EXPECT_DOUBLE_EQ(value(parse_point("The highlight moment happens at 26.8 seconds", 100)), 26.8);
  EXPECT_DOUBLE_EQ(value(parse_point("at 0 seconds", 100)), 0.0);
  EXPECT_EQ(failure(parse_point("no idea", 100)), "no-point");
}

TEST(Point, FallbackAndClamp) {
  EXPECT_DOUBLE_EQ(value(parse_point("Highlight: 12.5 seconds in", 100)), 12.5);
  EXPECT_DOUBLE_EQ(value(parse_point("happens at 130 seconds", 100)), 100.0);
}

TEST(Captioned, TableExampleDvc) {
  const auto segs = value(parse_captioned(
      "90 - 102 seconds, spread margarine on two slices of white bread. 114 - 127 seconds, place "
      "a slice of cheese on the bread.",
      200));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].interval, (TimeInterval{90, 102}));
  EXPECT_EQ(segs[0].caption, "spread margarine on two slices of white bread.");
  EXPECT_EQ(segs[1].interval, (TimeInterval{114, 127}));
  EXPECT_EQ(segs[1].caption, "place a slice of cheese on the bread.");
}

TEST(Captioned, TableExampleSlc) {
  const auto segs =
      value(parse_captioned("24.8 - 30.2 seconds, cut apple. 35.6 - 40.4 seconds, wash dishes.", 60));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].caption, "cut apple.");
  EXPECT_EQ(segs[1].caption, "wash dishes.");
}

TEST(Captioned, EmptyCaption) {
  const auto segs = value(parse_captioned("5 - 10,", 20));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].interval, (TimeInterval{5, 10}));
  EXPECT_EQ(segs[0].caption, "");
}

TEST(Captioned, NumberedLines) {
  const auto segs = value(parse_captioned("1. 0 - 4 seconds, crack eggs.\n2. 4 - 9 seconds, whisk.", 20));
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].caption, "crack eggs.");
  EXPECT_EQ(segs[1].caption, "whisk.");
}

TEST(Captioned, NoSegments) {
  EXPECT_EQ(failure(parse_captioned("a nice video", 20)), "no-segments");
}

TEST(Grounded, Examples) {
  const auto g =
      value(parse_grounded("Best Option: (C). The relevant event happens in 12.0 - 15.5 seconds", 150));
  EXPECT_EQ(g.letter, 'C');
  EXPECT_EQ(g.interval, (TimeInterval{12.0, 15.5}));
  EXPECT_EQ(failure(parse_grounded("Best Option: (B).", 150)), "no-intervals");
  EXPECT_EQ(failure(parse_grounded("The relevant event happens in 1 - 2 seconds", 150)),
            "no-choice");
}

TEST(ForTask, SingleBoundaryTasksKeepFirst) {
  const std::string text = "The action happens in 4.2 - 6.8, 7.5 - 10.3 seconds";
  for (TaskKind t : {TaskKind::TVG, TaskKind::EPM, TaskKind::TEM}) {
    const auto p = parse_for_task(t, text, 60);
    ASSERT_TRUE(std::holds_alternative<SingleInterval>(p));
    EXPECT_EQ(std::get<SingleInterval>(p).interval, (TimeInterval{4.2, 6.8}));
  }
  const auto all = parse_for_task(TaskKind::TAL, text, 60);
  ASSERT_TRUE(std::holds_alternative<IntervalSet>(all));
  EXPECT_EQ(std::get<IntervalSet>(all).intervals.size(), 2u);
}

TEST(ForTask, Mcq) {
  EXPECT_EQ(parse_for_task(TaskKind::RAR, "Best Option: (D)", 10), ParsedPrediction{McqAnswer{'D'}});
  EXPECT_EQ(parse_for_task(TaskKind::RVQ, "Best Option: (E)", 10), ParsedPrediction{McqAnswer{'E'}});
  EXPECT_TRUE(is_failure(parse_for_task(TaskKind::ECA, "Best Option: (E)", 10)));
}

TEST(Properties, TotalAndDeterministicOnRandomBytes) {
  Rng rng(99);
  const std::string alphabet = "0123456789 -.:,()sABCDEat\xE2\x80\x93\n";
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    const auto n = rng.below(60);
    for (std::uint64_t k = 0; k < n; ++k) {
      if (rng.bernoulli(0.1))
        text.push_back(static_cast<char>(rng.below(256)));
      else
        text.push_back(alphabet[rng.below(alphabet.size())]);
    }
    for (TaskKind t : kAllTasks) {
      const auto a = parse_for_task(t, text, 50.0);
      const auto b = parse_for_task(t, text, 50.0);
      ASSERT_EQ(a, b);
      if (auto *set = std::get_if<IntervalSet>(&a)) {
        for (const auto &iv : set->intervals) {
          ASSERT_LE(iv.start, iv.end);
          ASSERT_GE(iv.start, 0.0);
          ASSERT_LE(iv.end, 50.0);
        }
      }
      if (auto *f = std::get_if<ParseFailure>(&a)) {
        ASSERT_FALSE(f->reason.empty());
      }
    }
  }
}

TEST(Properties, OrderPreserved) {
  const auto got = ivs("30 - 31, 1 - 2, 15 - 16", 60);
  expect_intervals(got, {{30, 31}, {1, 2}, {15, 16}});
}

TEST(Properties, HugeNumbersDoNotCrash) {
  EXPECT_NO_THROW(parse_intervals(std::string(400, '9') + " - 5", 60));
  EXPECT_NO_THROW(parse_point("at " + std::string(400, '9'), 60));
}
