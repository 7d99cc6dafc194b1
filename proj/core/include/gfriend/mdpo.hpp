#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gfriend/levels.hpp"
#include "gfriend/toy_lm.hpp"

namespace gfriend {

/// Grade values per preference level, the weight sharpness alpha, and the
/// implicit-reward scale beta.
struct GradeConfig {
  int strong_accept = 2;
  int weak_accept = 1;
  int weak_reject = -1;
  int strong_reject = -2;
  double alpha = 1.0;
  double beta = 0.1;

  /// Throws ConfigError unless strong_accept > weak_accept > 0 > weak_reject > strong_reject,
  /// alpha >= 0 and beta > 0.
  void validate() const;
  /// Largest reachable |g+ - g-|.
  int max_gap() const noexcept { return strong_accept - strong_reject; }
};

int grade_value(PreferenceLevel level, const GradeConfig& cfg);

/// log(1 + exp(alpha * |g_plus - g_minus|)). Throws ArgumentError for alpha < 0.
double weight(double g_plus, double g_minus, double alpha);

double sigmoid(double x) noexcept;
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) noexcept;

/// One side of a preference pair: the answer continuation and the query it
/// is conditioned on. The two sides of a pair normally share the query, but
/// judgments sampled under different answer orders condition on different
/// prompt renderings of the same triple.
struct PreferenceSide {
  TokenSequence query;
  TokenSequence answer;
  /// Cached log pi_ref(answer | query); filled by cache_reference_logprobs.
  std::optional<double> reference_logprob;
};

struct PreferencePair {
  PreferenceSide positive;
  PreferenceSide negative;
  int g_plus = 1;
  int g_minus = -1;
};

using PairBatch = std::vector<PreferencePair>;

/// Precomputes the frozen reference log-probabilities of every side.
void cache_reference_logprobs(const PolicyModel& reference, std::span<PreferencePair> pairs);

/// beta * (log pi(answer|query) - log pi_ref(answer|query)).
/// Throws ConfigError if the two models differ in architecture or vocabulary.
double implicit_reward(const PolicyModel& policy, const PolicyModel& reference, const TokenSequence& query,
                       const TokenSequence& answer, double beta);

struct PreferenceLoss {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> margins;  // r+ - r- per pair
};

/// Mean over pairs of -w(g+, g-) * log sigmoid(r+ - r-) and its exact
/// gradient over the policy parameters.
PreferenceLoss mdpo_loss_and_grad(const PolicyModel& policy, const PolicyModel& reference,
                                  std::span<const PreferencePair> batch, const GradeConfig& cfg);

/// The unweighted loss: mdpo with w == 1.
PreferenceLoss dpo_loss_and_grad(const PolicyModel& policy, const PolicyModel& reference,
                                 std::span<const PreferencePair> batch, double beta);

/// Loss value only (no gradient), with the same weighting as mdpo_loss_and_grad.
double mdpo_loss(const PolicyModel& policy, const PolicyModel& reference, std::span<const PreferencePair> batch,
                 const GradeConfig& cfg);

}  // namespace gfriend
