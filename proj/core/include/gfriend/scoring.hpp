#pragma once

#include <span>

#include "gfriend/toy_lm.hpp"

namespace gfriend {

struct PplScoreConfig {
  /// Normalization temperature; must be positive.
  double tau = 20.0;
  void validate() const;
};

/// exp of the mean negative log-likelihood over the scored tokens.
/// Throws ArgumentError for an empty trace.
double perplexity(std::span<const double> token_logprobs);
double perplexity(const LogProbTrace& trace);

/// exp(-ppl / tau), strictly decreasing in ppl. Throws ArgumentError for
/// ppl < 1 (not reachable from a probability trace).
double ppl_score(double ppl, const PplScoreConfig& cfg);

/// Running-mean perplexity, for scoring a generation while it streams.
class StreamingPerplexity {
 public:
  void add(double token_logprob) noexcept;
  std::size_t count() const noexcept { return count_; }
  double value() const;

 private:
  std::size_t count_ = 0;
  double mean_nll_ = 0.0;
};

}  // namespace gfriend
