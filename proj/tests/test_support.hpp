#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gfriend/mdpo.hpp"
#include "gfriend/seed.hpp"
#include "gfriend/toy_lm.hpp"

namespace gfriend::testing {

inline std::shared_ptr<const Vocabulary> make_vocab(std::size_t n) {
  std::vector<std::string> tokens = {"<eos>"};
  for (std::size_t i = 1; i < n; ++i) tokens.push_back("t" + std::to_string(i));
  return std::make_shared<const Vocabulary>(std::move(tokens), 0);
}

inline Architecture small_arch() { return {5, 3, 4}; }

inline PolicyModel small_model(std::uint64_t seed, std::size_t vocab = 6, Architecture arch = small_arch()) {
  return PolicyModel::random(make_vocab(vocab), arch, seed, 1.0);
}

/// Random non-eos ids; `terminate` appends eos.
inline TokenSequence random_tokens(std::mt19937_64& rng, std::size_t vocab, std::size_t len, bool terminate = false) {
  TokenSequence s;
  for (std::size_t i = 0; i < len; ++i) s.ids.push_back(static_cast<TokenId>(1 + rng() % (vocab - 1)));
  if (terminate) s.ids.push_back(0);
  return s;
}

/// Central differences of `loss` over every parameter of `model`.
inline std::vector<double> numeric_gradient(PolicyModel model, const std::function<double(const PolicyModel&)>& loss,
                                            double h = 1e-4) {
  std::vector<double> g(model.parameters().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& p = model.parameters()[i];
    const double saved = p;
    p = saved + h;
    const double up = loss(model);
    p = saved - h;
    const double down = loss(model);
    p = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Largest |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose
/// true derivative is ~0 from dividing difference noise by nothing.
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  return worst;
}

/// A batch of preference pairs with random queries/answers and grades.
inline PairBatch random_pairs(std::mt19937_64& rng, std::size_t vocab, std::size_t count, const GradeConfig& g,
                              std::size_t context) {
  const int plus[] = {g.weak_accept, g.strong_accept};
  const int minus[] = {g.weak_reject, g.strong_reject};
  PairBatch batch;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t qlen = 1 + rng() % 2;
    const std::size_t alen = 1 + rng() % (context - qlen - 1);
    const auto query = random_tokens(rng, vocab, qlen);
    PreferencePair p;
    p.positive = {query, random_tokens(rng, vocab, alen - 1, true), std::nullopt};
    p.negative = {query, random_tokens(rng, vocab, 1 + rng() % (context - qlen - 1)), std::nullopt};
    p.g_plus = plus[rng() % 2];
    p.g_minus = minus[rng() % 2];
    batch.push_back(std::move(p));
  }
  return batch;
}

}  // namespace gfriend::testing
