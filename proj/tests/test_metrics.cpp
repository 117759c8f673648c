#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include <etbench/metrics.hpp>
#include <etbench/rng.hpp>

using namespace etbench;

namespace {

// Brute force: best number of pairs over every injection of the smaller side.
std::size_t brute_matches(const std::vector<TimeInterval> &p, const std::vector<TimeInterval> &g,
                          double theta) {
  std::size_t best = 0;
  std::vector<bool> used(g.size(), false);
  std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t n) {
    if (i == p.size()) {
      best = std::max(best, n);
      return;
    }
    go(i + 1, n);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (used[k] || iou(p[i], g[k]) < theta) continue;
      used[k] = true;
      go(i + 1, n + 1);
      used[k] = false;
    }
  };
  go(0, 0);
  return best;
}

std::vector<TimeInterval> random_intervals(Rng &rng, std::size_t n, double d) {
  std::vector<TimeInterval> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(0, d), b = rng.uniform(0, d);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return out;
}

} // namespace

TEST(IoU, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 10}, {0, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 10}, {10, 20}), 0.0);
  EXPECT_NEAR(iou({0, 10}, {5, 15}), 1.0 / 3.0, 1e-15);
}

TEST(IoU, ZeroLength) {
  EXPECT_DOUBLE_EQ(iou({5, 5}, {5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(iou({5, 5}, {6, 6}), 0.0);
  EXPECT_DOUBLE_EQ(iou({5, 5}, {0, 10}), 0.0);
}

TEST(Thresholds, Validation) {
  EXPECT_EQ(IoUThresholds().size(), 4u);
  EXPECT_THROW(IoUThresholds(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(IoUThresholds({0.5, 1.5}), std::invalid_argument);
}

TEST(SingleGrounding, Examples) {
  auto s = score_single_grounding(TimeInterval{10, 20}, {10, 20});
  EXPECT_EQ(s.per_threshold, (std::vector<double>{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  s = score_single_grounding(TimeInterval{0, 5}, {20, 30});
  EXPECT_DOUBLE_EQ(s.mean, 0.0);
  s = score_single_grounding(TimeInterval{0, 10}, {5, 15});
  EXPECT_EQ(s.per_threshold, (std::vector<double>{1, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  s = score_single_grounding(std::nullopt, {5, 15});
  EXPECT_DOUBLE_EQ(s.mean, 0.0);
}

TEST(SetGrounding, Examples) {
  const std::vector<TimeInterval> g{{0, 10}, {20, 30}};
  EXPECT_DOUBLE_EQ(score_set_grounding(g, g, 0.7).f1, 1.0);
  const auto prf = score_set_grounding({{0, 10}}, g, 0.5);
  EXPECT_DOUBLE_EQ(prf.precision, 1.0);
  EXPECT_DOUBLE_EQ(prf.recall, 0.5);
  EXPECT_NEAR(prf.f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(score_set_grounding({}, g, 0.1).f1, 0.0);
}

TEST(SetGrounding, GreedyCanUndercount) {
  // p0 fits g0 perfectly but is also the only prediction able to reach g1.
  const std::vector<TimeInterval> p{{0, 10}, {1, 10}};
  const std::vector<TimeInterval> g{{0, 10}, {0, 25}};
  EXPECT_EQ(count_matches(p, g, 0.4, MatchStrategy::Greedy), 1u);
  EXPECT_EQ(count_matches(p, g, 0.4, MatchStrategy::Optimal), 2u);
  EXPECT_EQ(brute_matches(p, g, 0.4), 2u);
}

TEST(SetGrounding, OptimalMatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 400; ++trial) {
    const auto p = random_intervals(rng, rng.below(7), 60);
    const auto g = random_intervals(rng, 1 + rng.below(6), 60);
    for (double theta : IoUThresholds()) {
      ASSERT_EQ(count_matches(p, g, theta), brute_matches(p, g, theta));
      ASSERT_LE(count_matches(p, g, theta, MatchStrategy::Greedy), brute_matches(p, g, theta));
    }
  }
}

TEST(SetGrounding, PermutationInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_intervals(rng, 1 + rng.below(6), 60);
    auto g = random_intervals(rng, 1 + rng.below(6), 60);
    const double f = score_set_grounding(p, g, 0.3).f1;
    std::reverse(p.begin(), p.end());
    std::rotate(g.begin(), g.begin() + 1, g.end());
    ASSERT_DOUBLE_EQ(score_set_grounding(p, g, 0.3).f1, f);
  }
}

TEST(Evs, Examples) {
  auto prf = score_evs({{0, 10}}, {{5, 15}}, {1.0, 20});
  EXPECT_DOUBLE_EQ(prf.precision, 0.5);
  EXPECT_DOUBLE_EQ(prf.recall, 0.5);
  EXPECT_DOUBLE_EQ(prf.f1, 0.5);
  prf = score_evs({{2, 7}, {9, 12}}, {{2, 7}, {9, 12}}, {1.0, 20});
  EXPECT_DOUBLE_EQ(prf.f1, 1.0);
  prf = score_evs({{0, 20}}, {{0, 2}}, {1.0, 20});
  EXPECT_DOUBLE_EQ(prf.precision, 0.1);
  EXPECT_DOUBLE_EQ(prf.recall, 1.0);
  EXPECT_NEAR(prf.f1, 2.0 / 11.0, 1e-12);
}

TEST(Evs, PartialLastClip) {
  // 10.5 s video: clip 10 covers [10, 10.5] with midpoint 10.25
  const ClipGrid grid{1.0, 10.5};
  EXPECT_EQ(grid.num_clips(), 11u);
  EXPECT_DOUBLE_EQ(grid.midpoint(10), 10.25);
  EXPECT_DOUBLE_EQ(score_evs({{10.2, 10.5}}, {{10.0, 10.3}}, grid).f1, 1.0);
}

TEST(Evs, MatchesClipEnumeration) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const double d = rng.uniform(1, 40);
    const double L = rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.3, 3);
    const auto p = random_intervals(rng, rng.below(6), d);
    const auto g = random_intervals(rng, 1 + rng.below(5), d);
    const std::size_t n = static_cast<std::size_t>(std::ceil(d / L));
    double tp = 0, np = 0, ng = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = 0.5 * (i * L + std::min((i + 1) * L, d));
      auto in = [&](const std::vector<TimeInterval> &v) {
        return std::any_of(v.begin(), v.end(),
                           [&](const TimeInterval &x) { return x.start <= m && m <= x.end; });
      };
      np += in(p);
      ng += in(g);
      tp += in(p) && in(g);
    }
    const double P = np ? tp / np : 0, R = ng ? tp / ng : 0;
    const double F = P + R > 0 ? 2 * P * R / (P + R) : 0;
    const auto prf = score_evs(p, g, {L, d});
    ASSERT_NEAR(prf.f1, F, 1e-12);
    ASSERT_NEAR(prf.precision, P, 1e-12);
    ASSERT_NEAR(prf.recall, R, 1e-12);
  }
}

TEST(Vhd, Examples) {
  EXPECT_EQ(score_vhd(26.8, {{25, 30}}), 1.0);
  EXPECT_EQ(score_vhd(5.0, {{25, 30}}), 0.0);
  EXPECT_EQ(score_vhd(25.0, {{25, 30}}), 1.0);
  EXPECT_EQ(score_vhd(std::nullopt, {{25, 30}}), 0.0);
  EXPECT_EQ(score_vhd(3.0, {{25, 30}, {2, 4}}), 1.0);
}

TEST(Tem, Examples) {
  const std::vector<TimeInterval> g{{0, 10}, {20, 30}, {40, 50}};
  EXPECT_DOUBLE_EQ(score_tem(TimeInterval{20, 30}, g).mean, 1.0);
  // IoU 0.4 with (0,10): intersection 4, union 10
  auto s = score_tem(TimeInterval{6, 10}, {{0, 10}, {40, 50}});
  EXPECT_EQ(s.per_threshold, (std::vector<double>{1, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_DOUBLE_EQ(score_tem(std::nullopt, g).mean, 0.0);
}

TEST(Gvq, Examples) {
  const GroundedMcq gt{'B', {0, 10}};
  // IoU 0.6: (0,6) vs (0,10)
  auto s = score_gvq(GroundedMcq{'B', {0, 6}}, gt);
  EXPECT_EQ(s.per_threshold, (std::vector<double>{1, 1, 1, 0}));
  EXPECT_DOUBLE_EQ(s.mean, 0.75);
  EXPECT_DOUBLE_EQ(score_gvq(GroundedMcq{'A', {0, 10}}, gt).mean, 0.0);
  EXPECT_DOUBLE_EQ(score_gvq(std::nullopt, gt).mean, 0.0);
}

TEST(Mcq, Examples) {
  EXPECT_EQ(score_mcq('A', 'A'), 1.0);
  EXPECT_EQ(score_mcq('B', 'A'), 0.0);
  EXPECT_EQ(score_mcq(std::nullopt, 'A'), 0.0);
}

TEST(Properties, BoundsSymmetryMonotonicity) {
  Rng rng(10);
  for (int i = 0; i < 5000; ++i) {
    const auto ab = random_intervals(rng, 2, 100);
    const double v = iou(ab[0], ab[1]);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_EQ(v, iou(ab[1], ab[0]));
    const auto s = score_single_grounding(ab[0], ab[1]);
    for (std::size_t k = 1; k < s.per_threshold.size(); ++k)
      ASSERT_LE(s.per_threshold[k], s.per_threshold[k - 1]);
  }
}
