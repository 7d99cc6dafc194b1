#include "gfriend/toy_lm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"
#include "internal/forward.hpp"

namespace gfriend {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos_id) : tokens_(std::move(tokens)), eos_id_(eos_id) {
  if (tokens_.size() < 2) throw VocabularyError("vocabulary needs at least two tokens");
  if (eos_id_ >= tokens_.size()) throw VocabularyError("eos id out of range");
  for (TokenId i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (t.empty()) throw VocabularyError("empty token string");
    if (std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); }))
      throw VocabularyError("token contains whitespace: '" + t + "'");
    if (!index_.emplace(t, i).second) throw VocabularyError("duplicate token: " + t);
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw VocabularyError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  if (auto found = find(token)) return *found;
  throw VocabularyError("unknown token '" + std::string(token) + "'");
}

void validate_sequence(const TokenSequence& seq, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (seq.ids[i] >= vocab.size())
      throw VocabularyError("token id " + std::to_string(seq.ids[i]) + " out of range at position " +
                            std::to_string(i));
    if (seq.ids[i] == vocab.eos_id() && i + 1 != seq.ids.size())
      throw VocabularyError("eos before the end of the sequence at position " + std::to_string(i));
  }
}

TokenSequence concat(const TokenSequence& a, const TokenSequence& b) {
  TokenSequence out;
  out.ids.reserve(a.size() + b.size());
  out.ids.insert(out.ids.end(), a.ids.begin(), a.ids.end());
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

std::size_t Architecture::parameter_count(std::size_t vocab_size) const noexcept {
  return ParameterLayout::of(*this, vocab_size).total;
}

ParameterLayout ParameterLayout::of(const Architecture& arch, std::size_t vocab_size) noexcept {
  ParameterLayout l;
  const std::size_t in = arch.context_window * arch.embedding_width;
  l.embedding = 0;
  l.w1 = l.embedding + (vocab_size + 1) * arch.embedding_width;
  l.b1 = l.w1 + arch.hidden_width * in;
  l.w2 = l.b1 + arch.hidden_width;
  l.b2 = l.w2 + vocab_size * arch.hidden_width;
  l.total = l.b2 + vocab_size;
  return l;
}

PolicyModel::PolicyModel(std::shared_ptr<const Vocabulary> vocab, Architecture arch, std::vector<double> parameters)
    : vocab_(std::move(vocab)), arch_(arch), params_(std::move(parameters)) {
  if (!vocab_) throw ArgumentError("model needs a vocabulary");
  if (arch_.context_window == 0 || arch_.embedding_width == 0 || arch_.hidden_width == 0)
    throw ArgumentError("architecture widths must be positive");
  layout_ = ParameterLayout::of(arch_, vocab_->size());
  if (params_.size() != layout_.total)
    throw ArgumentError("parameter count " + std::to_string(params_.size()) + " does not match architecture (" +
                        std::to_string(layout_.total) + ")");
}

PolicyModel PolicyModel::zeros(std::shared_ptr<const Vocabulary> vocab, Architecture arch) {
  const auto n = arch.parameter_count(vocab->size());
  return PolicyModel(std::move(vocab), arch, std::vector<double>(n, 0.0));
}

PolicyModel PolicyModel::random(std::shared_ptr<const Vocabulary> vocab, Architecture arch, std::uint64_t seed,
                                double scale) {
  const auto layout = ParameterLayout::of(arch, vocab->size());
  std::vector<double> p(layout.total, 0.0);
  // Box-Muller over our own uniform draws, so initial weights do not depend
  // on the standard library's distribution implementation.
  std::mt19937_64 rng(seed);
  auto normal = [&rng] {
    const double u1 = 1.0 - unit_interval(rng());
    const double u2 = unit_interval(rng());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };
  const double in = static_cast<double>(arch.context_window * arch.embedding_width);
  for (std::size_t i = layout.embedding; i < layout.w1; ++i) p[i] = scale * normal();
  for (std::size_t i = layout.w1; i < layout.b1; ++i) p[i] = scale * normal() / std::sqrt(in);
  for (std::size_t i = layout.w2; i < layout.b2; ++i)
    p[i] = scale * normal() / std::sqrt(static_cast<double>(arch.hidden_width));
  return PolicyModel(std::move(vocab), arch, std::move(p));
}

std::vector<double> PolicyModel::next_token_logits(std::span<const TokenId> prefix) const {
  detail::Activations acts;
  detail::forward(*this, prefix, acts);
  return acts.logits;
}

std::vector<double> PolicyModel::next_token_logprobs(std::span<const TokenId> prefix) const {
  detail::Activations acts;
  detail::forward(*this, prefix, acts);
  return acts.logprobs;
}

bool PolicyModel::same_shape(const PolicyModel& other) const noexcept {
  return arch_ == other.arch_ && *vocab_ == *other.vocab_;
}

double LogProbTrace::total() const noexcept {
  return std::accumulate(per_token_logprob.begin(), per_token_logprob.end(), 0.0);
}

TokenSequence LogProbTrace::continuation() const {
  TokenSequence out;
  out.ids.assign(sequence.ids.begin() + static_cast<std::ptrdiff_t>(conditioning_prefix_length), sequence.ids.end());
  return out;
}

namespace {

void check_scoring_inputs(const PolicyModel& model, const TokenSequence& prefix, const TokenSequence& continuation) {
  const auto& vocab = model.vocabulary();
  for (auto id : prefix.ids)
    if (id >= vocab.size()) throw VocabularyError("prefix token id " + std::to_string(id) + " out of range");
  for (auto id : continuation.ids)
    if (id >= vocab.size()) throw VocabularyError("continuation token id " + std::to_string(id) + " out of range");
  const auto total = prefix.size() + continuation.size();
  if (total > model.architecture().context_window)
    throw ContextExceededError("sequence length " + std::to_string(total) + " exceeds context window " +
                               std::to_string(model.architecture().context_window));
}

}  // namespace

LogProbTrace forward_logprobs(const PolicyModel& model, const TokenSequence& prefix, const TokenSequence& continuation) {
  check_scoring_inputs(model, prefix, continuation);
  LogProbTrace trace;
  trace.sequence = concat(prefix, continuation);
  trace.conditioning_prefix_length = prefix.size();
  trace.per_token_logprob.reserve(continuation.size());
  detail::Activations acts;
  const std::span<const TokenId> all(trace.sequence.ids);
  for (std::size_t t = 0; t < continuation.size(); ++t) {
    const std::size_t pos = prefix.size() + t;
    detail::forward(model, all.first(pos), acts);
    trace.per_token_logprob.push_back(acts.logprobs[all[pos]]);
  }
  return trace;
}

double accumulate_logprob_grad(const PolicyModel& model, const TokenSequence& prefix, const TokenSequence& continuation,
                               double coeff, std::span<double> grad) {
  check_scoring_inputs(model, prefix, continuation);
  if (grad.size() != model.parameters().size()) throw ArgumentError("gradient buffer has the wrong size");
  const auto seq = concat(prefix, continuation);
  const std::span<const TokenId> all(seq.ids);
  detail::Activations acts;
  detail::Scratch scratch;
  double total = 0.0;
  for (std::size_t t = 0; t < continuation.size(); ++t) {
    const std::size_t pos = prefix.size() + t;
    detail::forward(model, all.first(pos), acts);
    total += acts.logprobs[all[pos]];
    if (coeff != 0.0) detail::backward_logprob(model, acts, all[pos], coeff, grad, scratch);
  }
  return total;
}

LossAndGrad sft_loss_and_grad(const PolicyModel& model, std::span<const SftExample> batch) {
  if (batch.empty()) throw ArgumentError("sft batch is empty");
  LossAndGrad out;
  out.grad.assign(model.parameters().size(), 0.0);
  const double coeff = -1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) out.loss -= accumulate_logprob_grad(model, ex.prefix, ex.continuation, coeff, out.grad);
  out.loss /= static_cast<double>(batch.size());
  return out;
}

double sft_loss(const PolicyModel& model, std::span<const SftExample> batch) {
  if (batch.empty()) throw ArgumentError("sft batch is empty");
  double loss = 0.0;
  for (const auto& ex : batch) loss -= forward_logprobs(model, ex.prefix, ex.continuation).total();
  return loss / static_cast<double>(batch.size());
}

}  // namespace gfriend
