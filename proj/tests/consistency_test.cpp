#include <gtest/gtest.h>

#include <cmath>

#include "gfriend/consistency_lab.hpp"
#include "gfriend/errors.hpp"

using namespace gfriend;

namespace {

GradeRule default_rule() { return {}; }

}  // namespace

TEST(GenWorld, TwoPointAndRangeContract) {
  EXPECT_EQ(gen_world(2, 1.0, 123).true_scores, (std::vector<double>{0.0, 1.0}));
  const auto a = gen_world(8, 3.5, 7, Spacing::Uniform), b = gen_world(8, 3.5, 7, Spacing::Uniform);
  EXPECT_EQ(a.true_scores, b.true_scores);
  EXPECT_EQ(a.true_scores[0], 0.0);
  EXPECT_EQ(*std::min_element(a.true_scores.begin(), a.true_scores.end()), 0.0);
  EXPECT_LE(*std::max_element(a.true_scores.begin(), a.true_scores.end()), 3.5);
  EXPECT_NE(gen_world(8, 3.5, 8, Spacing::Uniform).true_scores, a.true_scores);
  EXPECT_THROW(gen_world(1, 1.0, 0), ArgumentError);
  EXPECT_THROW(gen_world(3, 0.0, 0), ArgumentError);
}

TEST(GenWorld, WinProbabilityAndMedian) {
  const auto w = gen_world(2, 1.0, 0);
  EXPECT_NEAR(w.win_probability(1, 0), 0.7311, 1e-4);
  EXPECT_NEAR(w.win_probability(1, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_DOUBLE_EQ(gen_world(4, 3.0, 0).median_margin(), 1.5);  // gaps 1,1,1,2,2,3
}

TEST(SamplePrefs, MonteCarloWinRate) {
  const auto w = gen_world(2, 1.0, 0);
  const auto s = sample_prefs(w, 50000, default_rule(), 11);
  ASSERT_EQ(s.size(), 50000u);
  double wins = 0;
  for (const auto& x : s) wins += x.winner == 1;
  EXPECT_NEAR(wins / 50000.0, 1.0 / (1.0 + std::exp(-1.0)), 0.01);
}

TEST(SamplePrefs, UnitDrawAndDeterminism) {
  const auto w = gen_world(5, 2.0, 0);
  const auto s = sample_prefs(w, 1, default_rule(), 3);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NE(s[0].winner, s[0].loser);
  EXPECT_TRUE(s[0].g_plus == 1 || s[0].g_plus == 2);
  EXPECT_TRUE(s[0].g_minus == -1 || s[0].g_minus == -2);
  const auto a = sample_prefs(w, 100, default_rule(), 4), b = sample_prefs(w, 100, default_rule(), 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].winner, b[i].winner);
    EXPECT_EQ(a[i].loser, b[i].loser);
    EXPECT_EQ(a[i].g_plus, b[i].g_plus);
  }
  EXPECT_THROW(sample_prefs(w, 0, default_rule(), 4), ArgumentError);
}

TEST(SamplePrefs, FlatWorldIsAllWeak) {
  BTWorld flat;
  flat.true_scores.assign(6, 0.0);
  for (const auto& s : sample_prefs(flat, 500, default_rule(), 5)) {
    EXPECT_EQ(s.g_plus, 1);
    EXPECT_EQ(s.g_minus, -1);
  }
}

TEST(SamplePrefs, StrengthFollowsMedianMargin) {
  const auto w = gen_world(6, 2.5, 0);
  const double median = w.median_margin();
  for (const auto& s : sample_prefs(w, 2000, default_rule(), 6)) {
    const bool wide = std::abs(w.true_scores[s.winner] - w.true_scores[s.loser]) > median;
    EXPECT_EQ(s.g_plus == 2, wide);
    EXPECT_EQ(s.g_minus == -2, wide);
  }
}

TEST(SamplePrefs, WeightsAreBounded) {
  const GradeConfig g;
  const double cap = std::log1p(std::exp(g.alpha * g.max_gap()));
  GradeRule noisy;
  noisy.label_noise = 0.3;
  for (const auto& s : sample_prefs(gen_world(8, 3.5, 1, Spacing::Uniform), 5000, noisy, 7)) {
    const double w = weight(s.g_plus, s.g_minus, g.alpha);
    EXPECT_GT(w, 0.0);
    EXPECT_LE(w, cap);
  }
}

TEST(FitWeightedMle, SeparableDataDiverges) {
  const std::vector<GradedSample> s(200, GradedSample{1, 0, 1, -1});
  const auto r = fit_weighted_mle(s, 2, {});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, FitOptions{}.max_iterations);
  EXPECT_GT(r.scores[1], 3.0);
}

TEST(FitWeightedMle, AlphaZeroMatchesMinorizeMaximize) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto world = gen_world(6, 2.0, seed, Spacing::Uniform);
    GradeRule rule;
    rule.grades.alpha = 0.0;
    const auto samples = sample_prefs(world, 3000, rule, seed);
    FitOptions opt;
    opt.max_iterations = 200000;
    opt.step = 1.0;
    opt.tolerance = 1e-12;
    const auto gd = fit_weighted_mle(samples, 6, rule.grades, opt);
    EXPECT_TRUE(gd.converged);
    const auto mm = fit_unweighted_mle_mm(samples, 6);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(gd.scores[i], mm[i], 1e-6);
  }
}

TEST(FitWeightedMle, RecoversTwoPointGap) {
  const auto world = gen_world(2, 1.0, 0);
  const auto samples = sample_prefs(world, 50000, default_rule(), 21);
  const auto r = fit_weighted_mle(samples, 2, {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.scores[1], 1.0, 0.05);
}

TEST(FitWeightedMle, ConvergesWithDefaultsOnEightItems) {
  const auto world = gen_world(8, 3.5, 0);
  const auto samples = sample_prefs(world, 50000, default_rule(), 1);
  const auto r = fit_weighted_mle(samples, 8, {});
  EXPECT_TRUE(r.converged) << "gradient norm " << r.gradient_norm;
  EXPECT_LT(centered_max_error(r.scores, world.true_scores), 0.05);
}

TEST(FitWeightedMle, IdentifiabilityErrors) {
  const std::vector<GradedSample> missing = {{1, 0, 1, -1}, {0, 1, 1, -1}};
  EXPECT_THROW(fit_weighted_mle(missing, 3, {}), IdentifiabilityError);
  const std::vector<GradedSample> split = {{1, 0, 1, -1}, {0, 1, 1, -1}, {3, 2, 1, -1}, {2, 3, 1, -1}};
  EXPECT_THROW(fit_weighted_mle(split, 4, {}), IdentifiabilityError);
  EXPECT_THROW(fit_unweighted_mle_mm(split, 4), IdentifiabilityError);
  const std::vector<GradedSample> self = {{1, 1, 1, -1}};
  EXPECT_THROW(fit_weighted_mle(self, 2, {}), ArgumentError);
}

TEST(FitWeightedMle, ShiftInvariance) {
  auto world = gen_world(5, 2.0, 0);
  auto shifted = world;
  for (auto& s : shifted.true_scores) s += 4.0;
  const auto a = sample_prefs(world, 4000, default_rule(), 9);
  const auto b = sample_prefs(shifted, 4000, default_rule(), 9);
  const auto fa = fit_weighted_mle(a, 5, {});
  const auto fb = fit_weighted_mle(b, 5, {});
  EXPECT_EQ(fa.scores, fb.scores);
  EXPECT_NEAR(centered_max_error(fa.scores, world.true_scores), centered_max_error(fb.scores, shifted.true_scores),
              1e-12);
}

TEST(KendallTau, Examples) {
  const std::vector<double> a = {0, 1, 2, 3};
  EXPECT_EQ(kendall_tau(a, a), 1.0);
  EXPECT_EQ(kendall_tau(a, std::vector<double>{3, 2, 1, 0}), -1.0);
  EXPECT_NEAR(kendall_tau(a, std::vector<double>{0, 2, 1, 3}), 4.0 / 6.0, 1e-15);
  EXPECT_THROW(kendall_tau(a, std::vector<double>{1}), ArgumentError);
  EXPECT_EQ(centered_max_error(std::vector<double>{5, 6, 8}, std::vector<double>{0, 1, 2}), 1.0);
}

TEST(ConsistencyReport, ErrorShrinksAndOrderIsRecovered) {
  const auto world = gen_world(8, 3.5, 0);
  const std::vector<std::size_t> grid = {1000, 5000, 50000};
  const auto rows = consistency_report(world, grid, default_rule(), 1);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(rows[i].n, grid[i]);
  EXPECT_GE(rows[0].centered_max_error, rows[1].centered_max_error);
  EXPECT_GE(rows[1].centered_max_error, rows[2].centered_max_error);
  EXPECT_LT(rows[2].centered_max_error, 0.05);
  EXPECT_EQ(rows[2].kendall_tau, 1.0);
}

TEST(ConsistencyReport, Preconditions) {
  const auto world = gen_world(3, 1.0, 0);
  EXPECT_THROW(consistency_report(world, std::vector<std::size_t>{}, default_rule(), 1), ArgumentError);
  EXPECT_THROW(consistency_report(world, std::vector<std::size_t>{500, 100}, default_rule(), 1), ArgumentError);
  const auto two = consistency_report(gen_world(2, 1.0, 0), std::vector<std::size_t>{100, 1000}, default_rule(), 2);
  EXPECT_EQ(two.size(), 2u);
}
