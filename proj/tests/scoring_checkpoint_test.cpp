#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "gfriend/checkpoint.hpp"
#include "gfriend/errors.hpp"
#include "gfriend/scoring.hpp"
#include "test_support.hpp"

using namespace gfriend;

TEST(Perplexity, UniformSixteen) {
  const auto m = PolicyModel::zeros(gfriend::testing::make_vocab(16), {6, 2, 3});
  const auto trace = forward_logprobs(m, {{1}}, {{2, 5, 9, 15}});
  EXPECT_NEAR(perplexity(trace), 16.0, 1e-12);
}

TEST(Perplexity, GeometricMeanExample) {
  const std::vector<double> lp = {std::log(0.5), std::log(0.125)};
  EXPECT_NEAR(perplexity(lp), 4.0, 1e-12);
}

TEST(Perplexity, CertainTokens) {
  const std::vector<double> lp = {0.0, 0.0, 0.0};
  EXPECT_EQ(perplexity(lp), 1.0);
}

TEST(Perplexity, EmptyTraceThrows) {
  EXPECT_THROW(perplexity(std::vector<double>{}), ArgumentError);
}

TEST(Perplexity, DependsOnlyOnMultiset) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5.0, 0.0);
  std::vector<double> lp(37);
  for (auto& x : lp) x = u(rng);
  const double base = perplexity(lp);
  std::shuffle(lp.begin(), lp.end(), rng);
  EXPECT_NEAR(perplexity(lp), base, 1e-12 * base);
}

TEST(Perplexity, StreamingMatchesBatch) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-8.0, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> lp(1 + rng() % 200);
    StreamingPerplexity s;
    for (auto& x : lp) {
      x = u(rng);
      s.add(x);
    }
    EXPECT_NEAR(s.value(), perplexity(lp), 1e-12 * perplexity(lp));
    EXPECT_EQ(s.count(), lp.size());
  }
  EXPECT_THROW(StreamingPerplexity{}.value(), ArgumentError);
}

TEST(PplScore, Examples) {
  const PplScoreConfig cfg;
  EXPECT_EQ(cfg.tau, 20.0);
  EXPECT_NEAR(ppl_score(20.0, cfg), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(ppl_score(20.0, cfg), 0.3679, 1e-4);
  EXPECT_NEAR(ppl_score(1.0, cfg), std::exp(-0.05), 1e-15);
  EXPECT_NEAR(ppl_score(1.0, cfg), 0.9512, 1e-4);
  EXPECT_LT(ppl_score(1e6, cfg), 1e-300);
}

TEST(PplScore, StrictlyDecreasingForAnyTau) {
  for (double tau : {0.5, 2.0, 20.0, 100.0}) {
    const PplScoreConfig cfg{tau};
    double prev = ppl_score(1.0, cfg);
    EXPECT_LE(prev, std::exp(-1.0 / tau));
    for (double ppl = 1.25; ppl < 60.0; ppl += 0.25) {
      const double s = ppl_score(ppl, cfg);
      EXPECT_LT(s, prev);
      EXPECT_GT(s, 0.0);
      prev = s;
    }
  }
}

TEST(PplScore, Preconditions) {
  EXPECT_THROW(ppl_score(0.99, {}), ArgumentError);
  EXPECT_THROW(PplScoreConfig{0.0}.validate(), ArgumentError);
  EXPECT_THROW(ppl_score(2.0, PplScoreConfig{-1.0}), ArgumentError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto m = gfriend::testing::small_model(7, 9, {6, 4, 5});
  std::stringstream ss;
  write_checkpoint(ss, m);
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.vocabulary(), m.vocabulary());
  EXPECT_EQ(back.architecture(), m.architecture());
  ASSERT_EQ(back.parameters().size(), m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) EXPECT_EQ(back.parameters()[i], m.parameters()[i]);
  const TokenSequence probe{{1, 2, 3}};
  EXPECT_EQ(forward_logprobs(back, {{4}}, probe).per_token_logprob,
            forward_logprobs(m, {{4}}, probe).per_token_logprob);
}

TEST(Checkpoint, FileRoundTripAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "gfriend_ckpt_test";
  std::filesystem::remove_all(dir);
  const auto m = gfriend::testing::small_model(8);
  save_checkpoint(dir / "sub" / "m.ckpt", m);
  const auto back = load_checkpoint(dir / "sub" / "m.ckpt");
  EXPECT_TRUE(std::equal(m.parameters().begin(), m.parameters().end(), back.parameters().begin()));
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, MalformedInputIsDataError) {
  std::stringstream bad1("not a checkpoint\n");
  EXPECT_THROW(read_checkpoint(bad1), DataError);

  const auto m = gfriend::testing::small_model(9);
  std::stringstream ss;
  write_checkpoint(ss, m);
  auto text = ss.str();
  std::stringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(truncated), DataError);

  const auto pos = text.find("gfriend-checkpoint 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 20, "gfriend-checkpoint 9");
  std::stringstream version(text);
  EXPECT_THROW(read_checkpoint(version), DataError);
}
