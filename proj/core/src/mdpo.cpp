#include "gfriend/mdpo.hpp"

#include <cmath>

#include "gfriend/errors.hpp"

namespace gfriend {

void GradeConfig::validate() const {
  if (!(strong_accept > weak_accept && weak_accept > 0 && 0 > weak_reject && weak_reject > strong_reject))
    throw ConfigError("grades must satisfy strong_accept > weak_accept > 0 > weak_reject > strong_reject");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be > 0");
}

int grade_value(PreferenceLevel level, const GradeConfig& cfg) {
  switch (level) {
    case PreferenceLevel::StrongAccept: return cfg.strong_accept;
    case PreferenceLevel::WeakAccept: return cfg.weak_accept;
    case PreferenceLevel::WeakReject: return cfg.weak_reject;
    case PreferenceLevel::StrongReject: return cfg.strong_reject;
  }
  throw ArgumentError("unknown preference level");
}

double weight(double g_plus, double g_minus, double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  const double x = alpha * std::abs(g_plus - g_minus);
  // softplus(x) for x >= 0
  return x + std::log1p(std::exp(-x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) noexcept {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

namespace {

void require_same_shape(const PolicyModel& policy, const PolicyModel& reference) {
  if (!policy.same_shape(reference))
    throw ConfigError("reference model architecture or vocabulary differs from the policy");
}

double reference_logprob(const PolicyModel& reference, const PreferenceSide& side) {
  if (side.reference_logprob) return *side.reference_logprob;
  return forward_logprobs(reference, side.query, side.answer).total();
}

// Shared body of the weighted and unweighted losses. weights[i] multiplies
// pair i; grad is skipped when `with_grad` is false.
PreferenceLoss preference_loss(const PolicyModel& policy, const PolicyModel& reference,
                               std::span<const PreferencePair> batch, std::span<const double> weights, double beta,
                               bool with_grad) {
  if (batch.empty()) throw ArgumentError("preference batch is empty");
  require_same_shape(policy, reference);
  PreferenceLoss out;
  if (with_grad) out.grad.assign(policy.parameters().size(), 0.0);
  out.margins.reserve(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    const double pos = forward_logprobs(policy, pair.positive.query, pair.positive.answer).total();
    const double neg = forward_logprobs(policy, pair.negative.query, pair.negative.answer).total();
    const double margin =
        beta * ((pos - reference_logprob(reference, pair.positive)) - (neg - reference_logprob(reference, pair.negative)));
    out.margins.push_back(margin);
    out.loss -= weights[i] * log_sigmoid(margin) * inv_n;
    if (with_grad) {
      // d/dmargin of -w log sigmoid(m) is -w sigmoid(-m).
      const double c = -weights[i] * sigmoid(-margin) * beta * inv_n;
      accumulate_logprob_grad(policy, pair.positive.query, pair.positive.answer, c, out.grad);
      accumulate_logprob_grad(policy, pair.negative.query, pair.negative.answer, -c, out.grad);
    }
  }
  return out;
}

std::vector<double> pair_weights(std::span<const PreferencePair> batch, double alpha) {
  std::vector<double> w;
  w.reserve(batch.size());
  for (const auto& p : batch) w.push_back(weight(p.g_plus, p.g_minus, alpha));
  return w;
}

}  // namespace

void cache_reference_logprobs(const PolicyModel& reference, std::span<PreferencePair> pairs) {
  for (auto& p : pairs) {
    p.positive.reference_logprob = forward_logprobs(reference, p.positive.query, p.positive.answer).total();
    p.negative.reference_logprob = forward_logprobs(reference, p.negative.query, p.negative.answer).total();
  }
}

double implicit_reward(const PolicyModel& policy, const PolicyModel& reference, const TokenSequence& query,
                       const TokenSequence& answer, double beta) {
  require_same_shape(policy, reference);
  if (beta == 0.0) return 0.0;
  return beta * (forward_logprobs(policy, query, answer).total() - forward_logprobs(reference, query, answer).total());
}

PreferenceLoss mdpo_loss_and_grad(const PolicyModel& policy, const PolicyModel& reference,
                                  std::span<const PreferencePair> batch, const GradeConfig& cfg) {
  cfg.validate();
  const auto w = pair_weights(batch, cfg.alpha);
  return preference_loss(policy, reference, batch, w, cfg.beta, true);
}

PreferenceLoss dpo_loss_and_grad(const PolicyModel& policy, const PolicyModel& reference,
                                 std::span<const PreferencePair> batch, double beta) {
  const std::vector<double> w(batch.size(), 1.0);
  return preference_loss(policy, reference, batch, w, beta, true);
}

double mdpo_loss(const PolicyModel& policy, const PolicyModel& reference, std::span<const PreferencePair> batch,
                 const GradeConfig& cfg) {
  cfg.validate();
  const auto w = pair_weights(batch, cfg.alpha);
  return preference_loss(policy, reference, batch, w, cfg.beta, false).loss;
}

}  // namespace gfriend
