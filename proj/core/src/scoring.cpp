#include "gfriend/scoring.hpp"

#include <cmath>
#include <numeric>

#include "gfriend/errors.hpp"

namespace gfriend {

void PplScoreConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be positive");
}

double perplexity(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw ArgumentError("perplexity of an empty trace");
  const double sum = std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

double perplexity(const LogProbTrace& trace) { return perplexity(trace.per_token_logprob); }

double ppl_score(double ppl, const PplScoreConfig& cfg) {
  cfg.validate();
  if (!(ppl >= 1.0)) throw ArgumentError("perplexity below 1 is impossible: " + std::to_string(ppl));
  return std::exp(-ppl / cfg.tau);
}

void StreamingPerplexity::add(double token_logprob) noexcept {
  ++count_;
  mean_nll_ += (-token_logprob - mean_nll_) / static_cast<double>(count_);
}

double StreamingPerplexity::value() const {
  if (count_ == 0) throw ArgumentError("perplexity of an empty trace");
  return std::exp(mean_nll_);
}

}  // namespace gfriend
