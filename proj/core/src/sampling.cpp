#include "gfriend/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

void SamplingConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ArgumentError("temperature must be positive");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ArgumentError("top_p must lie in (0, 1]");
  if (top_k == 0) throw ArgumentError("top_k must be positive");
  if (max_length == 0) throw ArgumentError("max_length must be positive");
  if (!(repetition_penalty >= 1.0) || !std::isfinite(repetition_penalty))
    throw ArgumentError("repetition_penalty must be >= 1");
}

std::vector<double> filtered_distribution(std::span<const double> logits, std::span<const TokenId> emitted,
                                          const SamplingConfig& cfg) {
  const std::size_t V = logits.size();
  std::vector<double> l(logits.begin(), logits.end());
  for (auto& x : l) x /= cfg.temperature;

  // Penalize each emitted token once: shrink positive logits, push negative ones further down.
  if (cfg.repetition_penalty != 1.0) {
    std::vector<bool> seen(V, false);
    for (auto id : emitted) {
      if (id >= V || seen[id]) continue;
      seen[id] = true;
      l[id] = l[id] > 0.0 ? l[id] / cfg.repetition_penalty : l[id] * cfg.repetition_penalty;
    }
  }

  std::vector<std::size_t> order(V);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return l[a] > l[b]; });
  const std::size_t k = std::min<std::size_t>(cfg.top_k, V);
  order.resize(k);

  const double m = l[order.front()];
  std::vector<double> kept(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += kept[i] = std::exp(l[order[i]] - m);
  for (auto& p : kept) p /= z;

  // Smallest head of the sorted list whose mass reaches top_p.
  std::size_t n = 0;
  double cum = 0.0;
  while (n < k) {
    cum += kept[n++];
    if (cum >= cfg.top_p) break;
  }

  std::vector<double> probs(V, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) mass += kept[i];
  for (std::size_t i = 0; i < n; ++i) probs[order[i]] = kept[i] / mass;
  return probs;
}

LogProbTrace sample(const PolicyModel& model, const TokenSequence& prefix, const SamplingConfig& cfg) {
  cfg.validate();
  validate_sequence(prefix, model.vocabulary());
  if (prefix.size() >= cfg.max_length)
    throw ArgumentError("prefix length " + std::to_string(prefix.size()) + " is not below max_length " +
                        std::to_string(cfg.max_length));
  const std::size_t window = model.architecture().context_window;
  if (prefix.size() >= window)
    throw ContextExceededError("prefix length " + std::to_string(prefix.size()) + " leaves no room in context window " +
                               std::to_string(window));
  const std::size_t limit = std::min<std::size_t>(cfg.max_length, window);

  std::mt19937_64 rng(cfg.seed);
  LogProbTrace trace;
  trace.sequence = prefix;
  trace.conditioning_prefix_length = prefix.size();
  const TokenId eos = model.vocabulary().eos_id();

  while (trace.sequence.size() < limit) {
    const std::span<const TokenId> state(trace.sequence.ids);
    const auto logits = model.next_token_logits(state);
    const auto probs = filtered_distribution(logits, state.subspan(prefix.size()), cfg);

    std::size_t chosen = 0;
    if (cfg.greedy) {
      chosen = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      const double u = unit_interval(rng());
      double cum = 0.0;
      chosen = probs.size();
      for (std::size_t v = 0; v < probs.size(); ++v) {
        if (probs[v] <= 0.0) continue;
        cum += probs[v];
        chosen = v;
        if (u < cum) break;
      }
    }
    trace.per_token_logprob.push_back(std::log(probs[chosen]));
    trace.sequence.ids.push_back(static_cast<TokenId>(chosen));
    if (chosen == eos) break;
  }
  return trace;
}

}  // namespace gfriend
