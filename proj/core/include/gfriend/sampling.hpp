#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gfriend/toy_lm.hpp"

namespace gfriend {

/// Decoding settings. Defaults are the judgment-sampling values used at paper
/// scale; `greedy` selects the argmax of the filtered distribution instead of
/// drawing from it (the temperature -> 0+ limit).
struct SamplingConfig {
  double temperature = 1.0;
  double top_p = 0.9;
  std::uint32_t top_k = 20;
  std::uint32_t max_length = 512;
  double repetition_penalty = 1.2;
  std::uint64_t seed = 0;
  bool greedy = false;

  /// Throws ArgumentError if any range constraint is violated.
  void validate() const;
};

/// The distribution actually sampled from at one step. Filters run in a fixed
/// order: temperature, repetition penalty over `emitted`, top-k, top-p, then
/// renormalization. Excluded tokens get probability 0.
std::vector<double> filtered_distribution(std::span<const double> logits, std::span<const TokenId> emitted,
                                          const SamplingConfig& cfg);

/// Autoregressive sampling from `prefix` until eos or the length limit
/// (min of max_length and the context window, counting prefix tokens).
/// The trace records the post-filter log-probability of every chosen token.
LogProbTrace sample(const PolicyModel& model, const TokenSequence& prefix, const SamplingConfig& cfg);

}  // namespace gfriend
