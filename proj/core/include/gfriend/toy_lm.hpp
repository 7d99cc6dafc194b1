#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gfriend {

using TokenId = std::uint32_t;

/// Ordered set of distinct token strings with a designated end-of-sequence
/// token. Token strings may not contain whitespace (the checkpoint format and
/// the prompt encoder both split on it).
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, TokenId eos_id);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId eos_id() const noexcept { return eos_id_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  /// Like find(), but throws VocabularyError for unknown strings.
  TokenId id(std::string_view token) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_ && eos_id_ == other.eos_id_; }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_id_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  bool terminated(const Vocabulary& vocab) const noexcept {
    return !ids.empty() && ids.back() == vocab.eos_id();
  }
  bool operator==(const TokenSequence&) const = default;
};

/// Throws VocabularyError when an id is out of range or eos appears anywhere
/// but the last position.
void validate_sequence(const TokenSequence& seq, const Vocabulary& vocab);

TokenSequence concat(const TokenSequence& a, const TokenSequence& b);

/// Fixed-context feed-forward LM: token embeddings for the last
/// `context_window` positions are concatenated (left-padded with a learned pad
/// embedding), passed through one tanh hidden layer, then projected to logits.
struct Architecture {
  std::size_t context_window = 24;
  std::size_t embedding_width = 8;
  std::size_t hidden_width = 48;

  std::size_t parameter_count(std::size_t vocab_size) const noexcept;
  bool operator==(const Architecture&) const = default;
};

/// Offsets of each parameter block inside the flat parameter vector.
struct ParameterLayout {
  std::size_t embedding = 0;  // (vocab + 1) x embedding_width, last row is the pad
  std::size_t w1 = 0;         // hidden x (context * embedding)
  std::size_t b1 = 0;         // hidden
  std::size_t w2 = 0;         // vocab x hidden
  std::size_t b2 = 0;         // vocab
  std::size_t total = 0;

  static ParameterLayout of(const Architecture& arch, std::size_t vocab_size) noexcept;
};

class PolicyModel {
 public:
  PolicyModel(std::shared_ptr<const Vocabulary> vocab, Architecture arch, std::vector<double> parameters);

  /// All-zero parameters: every next-token distribution is uniform.
  static PolicyModel zeros(std::shared_ptr<const Vocabulary> vocab, Architecture arch);
  /// Gaussian initialization, scale / sqrt(fan_in) for the dense layers.
  static PolicyModel random(std::shared_ptr<const Vocabulary> vocab, Architecture arch, std::uint64_t seed,
                            double scale = 1.0);

  const Vocabulary& vocabulary() const noexcept { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocabulary_ptr() const noexcept { return vocab_; }
  const Architecture& architecture() const noexcept { return arch_; }
  const ParameterLayout& layout() const noexcept { return layout_; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  /// Next-token log-probabilities given `prefix` (the whole state so far).
  /// The prefix must be shorter than the context window.
  std::vector<double> next_token_logprobs(std::span<const TokenId> prefix) const;
  /// Raw logits for the same input.
  std::vector<double> next_token_logits(std::span<const TokenId> prefix) const;

  bool same_shape(const PolicyModel& other) const noexcept;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  Architecture arch_;
  ParameterLayout layout_;
  std::vector<double> params_;
};

/// Per-token log-probabilities of the scored part of `sequence`; the first
/// `conditioning_prefix_length` tokens are conditioning only.
struct LogProbTrace {
  TokenSequence sequence;
  std::vector<double> per_token_logprob;
  std::size_t conditioning_prefix_length = 0;

  double total() const noexcept;
  std::size_t scored_count() const noexcept { return per_token_logprob.size(); }
  TokenSequence continuation() const;
};

/// Exact log pi(token | all preceding tokens) for every continuation token.
/// Throws ContextExceededError when prefix + continuation exceeds the context
/// window and VocabularyError on out-of-range ids.
LogProbTrace forward_logprobs(const PolicyModel& model, const TokenSequence& prefix,
                              const TokenSequence& continuation);

/// Adds coeff * d/dtheta [sum_t log pi(continuation_t | state_t)] into `grad`
/// and returns the summed log-probability. `grad` must have the model's
/// parameter count.
double accumulate_logprob_grad(const PolicyModel& model, const TokenSequence& prefix,
                               const TokenSequence& continuation, double coeff, std::span<double> grad);

struct SftExample {
  TokenSequence prefix;
  TokenSequence continuation;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean over the batch of the per-sequence negative log-likelihood of the
/// continuation tokens (prompt tokens carry no loss), with its exact gradient.
LossAndGrad sft_loss_and_grad(const PolicyModel& model, std::span<const SftExample> batch);

/// Loss only; avoids the gradient buffers.
double sft_loss(const PolicyModel& model, std::span<const SftExample> batch);

}  // namespace gfriend
