#pragma once

// Single-position forward/backward for the feed-forward LM. Private to core.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gfriend/errors.hpp"
#include "gfriend/toy_lm.hpp"

namespace gfriend::detail {

struct Activations {
  std::vector<std::size_t> slots;  // row of the embedding table per context slot
  std::vector<double> x;           // concatenated embeddings
  std::vector<double> h;           // tanh hidden
  std::vector<double> logits;
  std::vector<double> logprobs;
};

struct Scratch {
  std::vector<double> dlogits;
  std::vector<double> dz;
};

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline void forward(const PolicyModel& model, std::span<const TokenId> prefix, Activations& a) {
  const auto& arch = model.architecture();
  const auto& L = model.layout();
  const std::size_t V = model.vocabulary().size();
  const std::size_t C = arch.context_window, E = arch.embedding_width, H = arch.hidden_width;
  if (prefix.size() > C)
    throw ContextExceededError("prefix of " + std::to_string(prefix.size()) + " tokens exceeds context window " +
                               std::to_string(C));
  const auto p = model.parameters();

  // Right-aligned window; empty slots use the pad row V.
  a.slots.assign(C, V);
  const std::size_t offset = C - prefix.size();
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i] >= V) throw VocabularyError("token id " + std::to_string(prefix[i]) + " out of range");
    a.slots[offset + i] = prefix[i];
  }
  a.x.resize(C * E);
  for (std::size_t s = 0; s < C; ++s) {
    const double* row = p.data() + L.embedding + a.slots[s] * E;
    std::copy(row, row + E, a.x.begin() + static_cast<std::ptrdiff_t>(s * E));
  }

  const std::size_t in = C * E;
  a.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double* w = p.data() + L.w1 + j * in;
    double z = p[L.b1 + j];
    for (std::size_t i = 0; i < in; ++i) z += w[i] * a.x[i];
    a.h[j] = std::tanh(z);
  }

  a.logits.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    const double* w = p.data() + L.w2 + v * H;
    double z = p[L.b2 + v];
    for (std::size_t j = 0; j < H; ++j) z += w[j] * a.h[j];
    a.logits[v] = z;
  }
  const double lse = log_sum_exp(a.logits);
  a.logprobs.resize(V);
  for (std::size_t v = 0; v < V; ++v) a.logprobs[v] = a.logits[v] - lse;
}

// grad += coeff * d log p(target) / d theta, using activations from forward().
inline void backward_logprob(const PolicyModel& model, const Activations& a, TokenId target, double coeff,
                             std::span<double> grad, Scratch& s) {
  const auto& arch = model.architecture();
  const auto& L = model.layout();
  const std::size_t V = model.vocabulary().size();
  const std::size_t C = arch.context_window, E = arch.embedding_width, H = arch.hidden_width;
  const std::size_t in = C * E;
  const auto p = model.parameters();

  s.dlogits.resize(V);
  for (std::size_t v = 0; v < V; ++v) s.dlogits[v] = -coeff * std::exp(a.logprobs[v]);
  s.dlogits[target] += coeff;

  s.dz.assign(H, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    const double d = s.dlogits[v];
    grad[L.b2 + v] += d;
    double* gw = grad.data() + L.w2 + v * H;
    const double* w = p.data() + L.w2 + v * H;
    for (std::size_t j = 0; j < H; ++j) {
      gw[j] += d * a.h[j];
      s.dz[j] += d * w[j];
    }
  }
  for (std::size_t j = 0; j < H; ++j) s.dz[j] *= 1.0 - a.h[j] * a.h[j];

  for (std::size_t j = 0; j < H; ++j) {
    const double dz = s.dz[j];
    grad[L.b1 + j] += dz;
    double* gw = grad.data() + L.w1 + j * in;
    for (std::size_t i = 0; i < in; ++i) gw[i] += dz * a.x[i];
  }
  for (std::size_t slot = 0; slot < C; ++slot) {
    double* ge = grad.data() + L.embedding + a.slots[slot] * E;
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t i = slot * E + e;
      double dx = 0.0;
      for (std::size_t j = 0; j < H; ++j) dx += p[L.w1 + j * in + i] * s.dz[j];
      ge[e] += dx;
    }
  }
}

}  // namespace gfriend::detail
