#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gfriend/errors.hpp"
#include "gfriend/toy_lm.hpp"
#include "test_support.hpp"

using namespace gfriend;
using gfriend::testing::make_vocab;
using gfriend::testing::small_model;

namespace {

// Model whose every next-token distribution puts (numerically) all mass on `t`.
PolicyModel delta_model(std::size_t vocab, TokenId t) {
  auto m = PolicyModel::zeros(make_vocab(vocab), gfriend::testing::small_arch());
  m.parameters()[m.layout().b2 + t] = 1000.0;
  return m;
}

}  // namespace

TEST(Vocabulary, RejectsInvalidListings) {
  EXPECT_THROW(Vocabulary({"a"}, 0), VocabularyError);
  EXPECT_THROW(Vocabulary({"a", "a"}, 0), VocabularyError);
  EXPECT_THROW(Vocabulary({"a", "b"}, 2), VocabularyError);
  EXPECT_THROW(Vocabulary({"a", "b c"}, 0), VocabularyError);
}

TEST(Vocabulary, IndexIsABijection) {
  const auto v = make_vocab(10);
  for (TokenId i = 0; i < v->size(); ++i) EXPECT_EQ(v->id(v->token(i)), i);
  EXPECT_FALSE(v->find("missing").has_value());
  EXPECT_THROW(v->id("missing"), VocabularyError);
}

TEST(TokenSequence, EosOnlyLast) {
  const auto v = make_vocab(4);
  EXPECT_NO_THROW(validate_sequence({{1, 2, 0}}, *v));
  EXPECT_THROW(validate_sequence({{1, 0, 2}}, *v), VocabularyError);
  EXPECT_THROW(validate_sequence({{1, 7}}, *v), VocabularyError);
  EXPECT_TRUE(TokenSequence({1, 0}).terminated(*v));
}

TEST(ForwardLogprobs, UniformModelGivesMinusLogV) {
  const auto m = PolicyModel::zeros(make_vocab(4), gfriend::testing::small_arch());
  const auto trace = forward_logprobs(m, {{1}}, {{2, 3, 1}});
  ASSERT_EQ(trace.per_token_logprob.size(), 3u);
  for (double lp : trace.per_token_logprob) EXPECT_NEAR(lp, -std::log(4.0), 1e-12);
  EXPECT_NEAR(trace.total(), -3.0 * std::log(4.0), 1e-12);
  EXPECT_NEAR(trace.total(), -4.1589, 1e-4);
  EXPECT_EQ(trace.conditioning_prefix_length, 1u);
}

TEST(ForwardLogprobs, EmptyContinuation) {
  const auto m = small_model(1);
  const auto trace = forward_logprobs(m, {{1, 2}}, {});
  EXPECT_TRUE(trace.per_token_logprob.empty());
  EXPECT_EQ(trace.total(), 0.0);
}

TEST(ForwardLogprobs, DeltaDistribution) {
  const auto m = delta_model(5, 3);
  const auto trace = forward_logprobs(m, {}, {{3, 3}});
  EXPECT_EQ(trace.per_token_logprob, (std::vector<double>{0.0, 0.0}));
}

TEST(ForwardLogprobs, Errors) {
  const auto m = small_model(2);
  EXPECT_THROW(forward_logprobs(m, {{1, 2, 3}}, {{1, 2, 3}}), ContextExceededError);
  EXPECT_THROW(forward_logprobs(m, {{1}}, {{9}}), VocabularyError);
}

TEST(ForwardLogprobs, DistributionsSumToOne) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = small_model(trial);
    const auto prefix = gfriend::testing::random_tokens(rng, 6, rng() % 5);
    const auto lp = m.next_token_logprobs(prefix.ids);
    double s = 0.0;
    for (double x : lp) s += std::exp(x);
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(ForwardLogprobs, ChainRuleOfFactorization) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = small_model(100 + trial);
    const auto prefix = gfriend::testing::random_tokens(rng, 6, rng() % 2);
    const auto x = gfriend::testing::random_tokens(rng, 6, rng() % 2);
    const auto y = gfriend::testing::random_tokens(rng, 6, rng() % 2);
    const double whole = forward_logprobs(m, prefix, concat(x, y)).total();
    const double split = forward_logprobs(m, prefix, x).total() + forward_logprobs(m, concat(prefix, x), y).total();
    EXPECT_NEAR(whole, split, 1e-9);
  }
}

TEST(ForwardLogprobs, Deterministic) {
  const auto m = small_model(5);
  EXPECT_EQ(forward_logprobs(m, {{1}}, {{2, 3}}).per_token_logprob,
            forward_logprobs(m, {{1}}, {{2, 3}}).per_token_logprob);
}

TEST(SftLoss, UniformModelExample) {
  const auto m = PolicyModel::zeros(make_vocab(4), gfriend::testing::small_arch());
  const std::vector<SftExample> batch = {{{}, {{1, 2, 3}}}};
  EXPECT_NEAR(sft_loss_and_grad(m, batch).loss, 3.0 * std::log(4.0), 1e-12);
}

TEST(SftLoss, PerfectFitIsZero) {
  const auto m = delta_model(5, 2);
  const std::vector<SftExample> batch = {{{{1}}, {{2, 2, 2}}}};
  EXPECT_EQ(sft_loss_and_grad(m, batch).loss, 0.0);
}

TEST(SftLoss, MeanOverBatchOfSequenceSums) {
  const auto m = small_model(6);
  const SftExample a{{{1}}, {{2, 3}}}, b{{{4}}, {{5, 0}}};
  const double la = -forward_logprobs(m, a.prefix, a.continuation).total();
  const double lb = -forward_logprobs(m, b.prefix, b.continuation).total();
  const std::vector<SftExample> batch = {a, b};
  EXPECT_NEAR(sft_loss(m, batch), 0.5 * (la + lb), 1e-12);
}

TEST(SftLoss, EmptyBatchThrows) {
  const auto m = small_model(7);
  EXPECT_THROW(sft_loss_and_grad(m, {}), ArgumentError);
}

TEST(SftLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = small_model(200 + trial);
    std::vector<SftExample> batch;
    for (int i = 0; i < 3; ++i) {
      const auto p = gfriend::testing::random_tokens(rng, 6, rng() % 2);
      batch.push_back({p, gfriend::testing::random_tokens(rng, 6, 1 + rng() % 3, rng() % 2)});
    }
    const auto analytic = sft_loss_and_grad(m, batch).grad;
    const auto numeric =
        gfriend::testing::numeric_gradient(m, [&](const PolicyModel& mm) { return sft_loss(mm, batch); });
    EXPECT_LT(gfriend::testing::max_relative_error(analytic, numeric), 1e-4);
  }
}

TEST(SftLoss, GradientMatchesOnTwoThousandParameterModel) {
  // 12 tokens, context 8, embedding 6, hidden 30: 1,920 parameters.
  const Architecture arch{8, 6, 30};
  const auto m = PolicyModel::random(make_vocab(12), arch, 9, 1.0);
  ASSERT_LE(m.parameters().size(), 2000u);
  ASSERT_GT(m.parameters().size(), 1900u);
  const std::vector<SftExample> batch = {{{{1, 2, 3}}, {{4, 5, 0}}}, {{{6}}, {{7, 8, 9, 10, 11}}}};
  const auto analytic = sft_loss_and_grad(m, batch).grad;
  const auto numeric = gfriend::testing::numeric_gradient(m, [&](const PolicyModel& mm) { return sft_loss(mm, batch); });
  EXPECT_LT(gfriend::testing::max_relative_error(analytic, numeric), 1e-4);
}

TEST(PolicyModel, ParameterCountMatchesLayout) {
  const Architecture arch{5, 3, 4};
  // embedding (6+1)*3, W1 4*15, b1 4, W2 6*4, b2 6
  EXPECT_EQ(arch.parameter_count(6), 21u + 60u + 4u + 24u + 6u);
  EXPECT_THROW(PolicyModel(make_vocab(6), arch, std::vector<double>(3)), ArgumentError);
}

TEST(PolicyModel, RandomIsSeeded) {
  const auto a = small_model(11), b = small_model(11), c = small_model(12);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}
