#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gfriend/errors.hpp"
#include "gfriend/trainer.hpp"
#include "test_support.hpp"

using namespace gfriend;
using gfriend::testing::make_vocab;
using gfriend::testing::small_model;

namespace {

// Continuation is a deterministic function of the one-token prefix.
std::vector<SftExample> copy_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SftExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId a = static_cast<TokenId>(1 + rng() % 5);
    out.push_back({{{a}}, {{a, static_cast<TokenId>(1 + a % 5), 0}}});
  }
  return out;
}

TrainConfig quick(Stage stage) {
  auto c = TrainConfig::desk_preset(stage);
  c.batch_size = 16;
  c.epochs = 5;
  return c;
}

}  // namespace

TEST(LearningRate, WarmupThenCosine) {
  TrainConfig c;
  c.peak_learning_rate = 1.0;
  c.min_learning_rate = 0.0;
  c.warmup_fraction = 0.1;
  EXPECT_DOUBLE_EQ(learning_rate(c, 1, 100), 0.1);
  EXPECT_DOUBLE_EQ(learning_rate(c, 5, 100), 0.5);
  EXPECT_DOUBLE_EQ(learning_rate(c, 10, 100), 1.0);
  EXPECT_NEAR(learning_rate(c, 55, 100), 0.5, 1e-12);
  EXPECT_NEAR(learning_rate(c, 100, 100), 0.0, 1e-12);
  for (std::size_t s = 11; s < 100; ++s) EXPECT_GE(learning_rate(c, s, 100), learning_rate(c, s + 1, 100));
  c.min_learning_rate = 0.2;
  EXPECT_NEAR(learning_rate(c, 100, 100), 0.2, 1e-12);
  c.schedule = Schedule::Constant;
  EXPECT_DOUBLE_EQ(learning_rate(c, 70, 100), 1.0);
}

TEST(TrainConfig, PresetsAndValidation) {
  const auto p = TrainConfig::paper_preset(Stage::Mdpo);
  EXPECT_EQ(p.batch_size, 128u);
  EXPECT_DOUBLE_EQ(p.warmup_fraction, 0.1);
  EXPECT_EQ(p.schedule, Schedule::Cosine);
  EXPECT_NO_THROW(TrainConfig::desk_preset(Stage::Sft).validate());
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.min_learning_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AdamW, FirstStepMovesBySignTimesLr) {
  AdamW opt(3, 0.9, 0.999, 0.0, 0.0);
  std::vector<double> p = {1.0, 1.0, 1.0};
  const std::vector<double> g = {0.5, -2.0, 0.0};
  opt.step(p, g, 0.1);
  EXPECT_NEAR(p[0], 0.9, 1e-15);
  EXPECT_NEAR(p[1], 1.1, 1e-15);
  EXPECT_EQ(p[2], 1.0);
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_THROW(opt.step(p, std::vector<double>(2), 0.1), ArgumentError);
}

TEST(RunSft, ZeroLearningRateLeavesParametersUnchanged) {
  const auto m = small_model(1);
  auto c = quick(Stage::Sft);
  c.peak_learning_rate = 0.0;
  c.weight_decay = 0.5;
  const auto corpus = copy_corpus(40, 1);
  const auto r = run_sft(m, corpus, c);
  EXPECT_TRUE(std::equal(m.parameters().begin(), m.parameters().end(), r.model.parameters().begin()));
}

TEST(RunSft, LossDecreasesOnLearnableCorpus) {
  const auto corpus = copy_corpus(200, 2);
  const auto r = run_sft(small_model(2), corpus, quick(Stage::Sft));
  EXPECT_EQ(r.report.loss_series.size(), 5u * 13u);
  EXPECT_LT(r.report.final_loss, r.report.initial_loss);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    head += r.report.loss_series[i];
    tail += r.report.loss_series[r.report.loss_series.size() - 1 - i];
  }
  EXPECT_LT(tail, head);
  EXPECT_EQ(r.report.counts.at("examples"), 200u);
}

TEST(RunSft, DeterministicForSeed) {
  const auto corpus = copy_corpus(60, 3);
  const auto a = run_sft(small_model(3), corpus, quick(Stage::Sft));
  const auto b = run_sft(small_model(3), corpus, quick(Stage::Sft));
  EXPECT_EQ(a.report.loss_series, b.report.loss_series);
  EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(), b.model.parameters().begin()));
  auto other = quick(Stage::Sft);
  other.seed = 77;
  EXPECT_NE(run_sft(small_model(3), corpus, other).report.loss_series, a.report.loss_series);
}

TEST(RunSft, HooksAndErrors) {
  const auto corpus = copy_corpus(32, 4);
  auto c = quick(Stage::Sft);
  c.epochs = 2;
  c.checkpoint_every = 3;
  std::vector<std::size_t> ckpts;
  std::size_t steps = 0;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](std::size_t s, const PolicyModel&) { ckpts.push_back(s); };
  hooks.on_step = [&](std::size_t, std::span<const double>) { ++steps; };
  hooks.evaluate = [](const PolicyModel&) { return 0.25; };
  const auto r = run_sft(small_model(4), corpus, c, hooks);
  EXPECT_EQ(steps, 4u);
  EXPECT_EQ(ckpts, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(r.report.heldout_accuracy, 0.25);
  EXPECT_THROW(run_sft(small_model(4), {}, c), ArgumentError);
}

TEST(RunSft, DivergenceGuardTrips) {
  const auto corpus = copy_corpus(64, 5);
  auto c = quick(Stage::Sft);
  c.batch_size = 1;
  c.peak_learning_rate = 50.0;
  c.warmup_fraction = 0.0;
  c.schedule = Schedule::Constant;
  c.divergence_factor = 1.5;
  c.divergence_patience = 5;
  EXPECT_THROW(run_sft(small_model(5), corpus, c), DivergenceError);
}

TEST(RunMdpo, LossDecreasesAndReferenceIsUntouched) {
  std::mt19937_64 rng(6);
  const auto ref = small_model(6);
  const auto saved = ref.parameters();
  const auto pairs = gfriend::testing::random_pairs(rng, 6, 64, {}, 5);
  auto c = quick(Stage::Mdpo);
  c.peak_learning_rate = 1e-2;
  const auto r = run_mdpo(ref, ref, pairs, c, {});
  EXPECT_LT(r.report.final_loss, r.report.initial_loss);
  EXPECT_NEAR(r.report.initial_loss, mdpo_loss(ref, ref, pairs, {}), 1e-12);
  EXPECT_TRUE(std::equal(saved.begin(), saved.end(), ref.parameters().begin()));
  std::size_t graded = 0;
  for (const auto& [k, v] : r.report.counts)
    if (k.rfind("pairs_g", 0) == 0) graded += v;
  EXPECT_EQ(graded, 64u);
}

TEST(RunMdpo, AlphaZeroFollowsTheDpoTrajectory) {
  // With epsilon = 0, Adam is invariant to the constant log 2 loss scale, so
  // unweighted M-DPO and DPO visit the same parameters.
  std::mt19937_64 rng(7);
  const auto ref = small_model(7);
  const auto pairs = gfriend::testing::random_pairs(rng, 6, 40, {}, 5);
  auto c = quick(Stage::Mdpo);
  c.adam_epsilon = 0.0;
  c.peak_learning_rate = 1e-2;
  GradeConfig g;
  g.alpha = 0.0;
  std::vector<std::vector<double>> a, b;
  TrainHooks ha, hb;
  ha.on_step = [&](std::size_t, std::span<const double> p) { a.emplace_back(p.begin(), p.end()); };
  hb.on_step = [&](std::size_t, std::span<const double> p) { b.emplace_back(p.begin(), p.end()); };
  run_mdpo(ref, ref, pairs, c, g, PairWeighting::Mdpo, ha);
  run_mdpo(ref, ref, pairs, c, g, PairWeighting::Dpo, hb);
  ASSERT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s)
    for (std::size_t i = 0; i < a[s].size(); ++i) worst = std::max(worst, std::abs(a[s][i] - b[s][i]));
  EXPECT_LT(worst, 1e-9);
}

TEST(RunMdpo, Errors) {
  const auto ref = small_model(8);
  EXPECT_THROW(run_mdpo(ref, ref, {}, quick(Stage::Mdpo), {}), ArgumentError);
  std::mt19937_64 rng(8);
  const auto pairs = gfriend::testing::random_pairs(rng, 6, 4, {}, 5);
  EXPECT_THROW(run_mdpo(ref, small_model(8, 7), pairs, quick(Stage::Mdpo), {}), ConfigError);
}

TEST(EvaluateJudge, ConstantAndPerfectJudges) {
  std::vector<LabeledTriple> triples;
  for (int i = 0; i < 200; ++i) triples.push_back({"t" + std::to_string(i), "Q", "good", "bad"});
  const JudgmentProvider always_first = [](const std::string&, const SamplingConfig&) {
    return Generation{R"({"CoT": "x", "Chosen answer": "Answer 1"})", std::vector<double>{-0.1}};
  };
  const JudgmentProvider perfect = [](const std::string& prompt, const SamplingConfig&) {
    const bool first = prompt.find("Answer 1: good") != std::string::npos;
    return Generation{std::string(R"({"CoT": "x", "Chosen answer": ")") + (first ? "1" : "2") + "\"}", std::nullopt};
  };
  const JudgmentProvider garbage = [](const std::string&, const SamplingConfig&) { return Generation{"?", {}}; };
  const auto c = evaluate_judge(always_first, triples, {}, {}, 0.5, 1);
  EXPECT_EQ(c.total, 200u);
  EXPECT_NEAR(c.accuracy(), 0.5, 0.1);
  std::size_t levels = 0;
  for (const auto& [l, n] : c.level_counts) levels += n;
  EXPECT_EQ(levels, 200u);
  EXPECT_EQ(evaluate_judge(perfect, triples, {}, {}, 0.5, 1).accuracy(), 1.0);
  const auto g = evaluate_judge(garbage, triples, {}, {}, 0.5, 1);
  EXPECT_EQ(g.parse_failures, 200u);
  EXPECT_EQ(g.accuracy(), 0.0);
  EXPECT_EQ(EvalResult{}.accuracy(), 0.0);
}
