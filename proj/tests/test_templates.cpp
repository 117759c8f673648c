#include <gtest/gtest.h>

#include <set>

#include <etbench/parse.hpp>
#include <etbench/templates.hpp>

#include "roundtrip.hpp"

using namespace etbench;

namespace {

bool has(const std::string &s, const std::string &needle) {
  return s.find(needle) != std::string::npos;
}

} // namespace

TEST(FormatTime, Examples) {
  EXPECT_EQ(format_time(10.2), "10.2");
  EXPECT_EQ(format_time(90), "90.0");
  EXPECT_EQ(format_time(0), "0.0");
}

TEST(Instruction, TvgContainsQueryAndFormat) {
  Placeholders ph;
  ph.text = {{"query", "person opens door"}, {"domain", "daily indoor activities"}};
  const auto s = render_instruction({TemplateFamily::Benchmark, TaskKind::TVG, 0}, ph);
  EXPECT_TRUE(has(s, "\"person opens door\""));
  EXPECT_TRUE(has(s, "The event happens in <start time> - <end time>"));
  EXPECT_FALSE(has(s, "{"));
}

TEST(Instruction, RarOptionsAndTime) {
  Placeholders ph;
  ph.options = {"open fridge", "close fridge", "pour milk", "drink"};
  ph.times = {12.0};
  const auto s = render_instruction({TemplateFamily::Benchmark, TaskKind::RAR, 0}, ph);
  EXPECT_TRUE(has(s, "(A) open fridge (B) close fridge (C) pour milk (D) drink"));
  EXPECT_TRUE(has(s, "around 12.0s"));
}

TEST(Instruction, MissingPlaceholder) {
  try {
    render_instruction({TemplateFamily::Benchmark, TaskKind::TVG, 0}, {{{"domain", "x"}}, {}, {}});
    FAIL();
  } catch (const MissingPlaceholder &e) {
    EXPECT_EQ(e.name(), "query");
  }
  EXPECT_THROW(render_instruction({TemplateFamily::Benchmark, TaskKind::RAR, 0}, {}),
               MissingPlaceholder);
}

TEST(Instruction, UnknownVariant) {
  EXPECT_THROW(render_instruction({TemplateFamily::Benchmark, TaskKind::TVG, 3}, {}),
               UnknownTemplate);
}

TEST(Instruction, InjectiveOverQuery) {
  std::set<std::string> seen;
  for (const char *q : {"a", "b", "a b", "ab", "open the door", "open the doors"}) {
    Placeholders ph;
    ph.text = {{"query", q}, {"domain", "d"}};
    seen.insert(render_instruction({TemplateFamily::Benchmark, TaskKind::TVG, 0}, ph));
  }
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Response, Examples) {
  EXPECT_EQ(render_response(TaskKind::TVG, SingleInterval{{10.2, 12.8}}),
            "The event happens in 10.2 - 12.8 seconds.");
  EXPECT_EQ(render_response(TaskKind::VHD, HighlightRegions{{{26.8, 26.8}}}),
            "The highlight moment happens at 26.8 seconds.");
  EXPECT_EQ(render_response(TaskKind::GVQ, GroundedMcq{'C', {12.0, 15.5}}),
            "Best Option: (C). The relevant event happens in 12.0 - 15.5 seconds.");
  EXPECT_EQ(render_response(TaskKind::RAR, McqAnswer{'B'}), "Best Option: (B)");
}

TEST(Response, MultiIntervalAndCaptions) {
  const auto tal = render_response(TaskKind::TAL, IntervalSet{{{4.2, 6.8}, {7.5, 10.3}, {15.1, 18.6}}});
  EXPECT_TRUE(has(tal, "4.2 - 6.8, 7.5 - 10.3, and 15.1 - 18.6"));
  EXPECT_EQ(render_response(TaskKind::DVC, CaptionedSegments{{{{90, 102}, "spread margarine."},
                                                               {{114, 127}, "place cheese."}}}),
            "90.0 - 102.0 seconds, spread margarine. 114.0 - 127.0 seconds, place cheese.");
}

TEST(Response, VariantMismatch) {
  EXPECT_THROW(render_response(TaskKind::TVG, McqAnswer{'A'}), VariantMismatch);
  EXPECT_THROW(render_response(TaskKind::GVQ, SingleInterval{{1, 2}}), VariantMismatch);
}

TEST(Corpus, VariantCounts) {
  const auto &c = TemplateCorpus::builtin();
  EXPECT_FALSE(c.version().empty());
  for (TaskKind t : kAllTasks) {
    EXPECT_GE(c.variant_count(TemplateFamily::Benchmark, t), 1u) << task_name(t);
    EXPECT_TRUE(c.contains("response/" + std::string(task_name(t))));
  }
  for (TaskKind t : {TaskKind::DVC, TaskKind::TAL, TaskKind::TVG, TaskKind::EVS, TaskKind::VHD,
                     TaskKind::SLC, TaskKind::GVQ})
    EXPECT_EQ(c.variant_count(TemplateFamily::Tuning, t), 6u) << task_name(t);
}

TEST(Corpus, FromJsonAndLoad) {
  const auto c = TemplateCorpus::from_json(
      nlohmann::json::parse(R"({"version":"t","templates":{"bench/TVG/0":"Q={query}"}})"));
  Placeholders ph;
  ph.text["query"] = "x";
  EXPECT_EQ(c.render_instruction({TemplateFamily::Benchmark, TaskKind::TVG, 0}, ph), "Q=x");
  EXPECT_THROW(TemplateCorpus::load("/nonexistent/templates.json"), std::runtime_error);
}

TEST(Corpus, BenchmarkTemplatesRenderWithFullPlaceholders) {
  Placeholders ph;
  for (const char *k : {"query", "question", "action", "task", "domain"}) ph.text[k] = "x";
  ph.options = {"a", "b", "c", "d"};
  ph.times = {1.0, 2.0};
  for (TaskKind t : kAllTasks) {
    const auto s = render_instruction({TemplateFamily::Benchmark, t, 0}, ph);
    EXPECT_FALSE(s.empty());
    EXPECT_FALSE(has(s, "{")) << s;
  }
}

TEST(RoundTrip, ParseRecoversRenderedTruth) {
  Rng rng(21);
  for (TaskKind t : kAllTasks)
    for (int i = 0; i < 200; ++i) {
      const double d = rng.uniform(5, 600);
      const auto gt = rt::random_truth(t, d, rng);
      const auto text = render_response(t, gt);
      ASSERT_TRUE(rt::recovers(t, gt, parse_for_task(t, text, d), 0.05 + 1e-9))
          << task_name(t) << ": " << text;
    }
}
