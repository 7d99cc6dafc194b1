#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gfriend/levels.hpp"
#include "gfriend/mdpo.hpp"
#include "gfriend/sampling.hpp"
#include "gfriend/scoring.hpp"

namespace gfriend {

/// A labeled preference sample: `accepted` is preferred over `rejected`.
struct LabeledTriple {
  std::string id;
  std::string question;
  std::string accepted;
  std::string rejected;

  /// Throws ArgumentError on empty fields or accepted == rejected.
  void validate() const;
  bool operator==(const LabeledTriple&) const = default;
};

enum class AnswerPosition { Answer1 = 1, Answer2 = 2 };

constexpr std::string_view to_string(AnswerPosition p) noexcept {
  return p == AnswerPosition::Answer1 ? "Answer 1" : "Answer 2";
}
constexpr AnswerPosition other(AnswerPosition p) noexcept {
  return p == AnswerPosition::Answer1 ? AnswerPosition::Answer2 : AnswerPosition::Answer1;
}

/// Case-insensitive "Answer 1" / "Answer1" / "1" (and likewise for 2).
std::optional<AnswerPosition> answer_from_string(std::string_view s);

struct JudgmentPrompt {
  std::string text;
  /// Where the accepted answer was placed. Never part of `text`.
  AnswerPosition a_plus_position = AnswerPosition::Answer1;
};

/// Position of the accepted answer for a given order seed (fair coin per seed).
AnswerPosition accepted_position(std::uint64_t order_seed) noexcept;

/// Fills the judging template with the question and both answers in the order
/// chosen by `order_seed`. The template does not reveal which answer is labeled
/// preferred.
JudgmentPrompt build_judgment_prompt(const LabeledTriple& triple, std::uint64_t order_seed);

// ---------------------------------------------------------------------------
// Parsing

struct ParsedJudgment {
  std::string cot;
  AnswerPosition chosen = AnswerPosition::Answer1;
  bool operator==(const ParsedJudgment&) const = default;
};

enum class ParseErrorKind { NoJsonObject, MalformedJson, MissingCot, MissingChosenAnswer, UnrecognizedAnswer };

std::string_view to_string(ParseErrorKind k) noexcept;

struct ParseError {
  ParseErrorKind kind;
  std::string detail;
};

using ParseResult = std::variant<ParsedJudgment, ParseError>;

/// Extracts "CoT" and "Chosen answer" from the first balanced JSON object in
/// `text`; prose before and after the object is ignored. Key lookup is
/// case-insensitive.
ParseResult parse_judgment(std::string_view text);

/// The canonical JSON rendering {"CoT": ..., "Chosen answer": "Answer N"}.
std::string render_judgment(const ParsedJudgment& j);

// ---------------------------------------------------------------------------
// Classification and pairing

/// Four-level partition of (score vs threshold) x correctness. A score equal
/// to the threshold counts as weak. Throws ArgumentError unless score and
/// threshold lie in (0, 1).
PreferenceLevel classify(double score, bool correct, double threshold_p);

enum class ProviderKind { Internal, External };
enum class ScoreSource { Provider, InternalRescore };

constexpr std::string_view to_string(ProviderKind p) noexcept {
  return p == ProviderKind::Internal ? "internal" : "external";
}
constexpr std::string_view to_string(ScoreSource s) noexcept {
  return s == ScoreSource::Provider ? "provider" : "internal_rescore";
}

struct Judgment {
  std::string triple_id;
  std::string cot;
  AnswerPosition chosen = AnswerPosition::Answer1;
  double ppl = 1.0;
  double score = 0.0;
  bool correct = false;
  PreferenceLevel level = PreferenceLevel::WeakReject;
  ProviderKind provider = ProviderKind::Internal;
  ScoreSource score_source = ScoreSource::Provider;
  /// Seed of the attempt that produced this judgment; also the order seed of
  /// its prompt, so the prompt can be rebuilt from the triple.
  std::uint64_t seed = 0;

  bool operator==(const Judgment&) const = default;
};

struct GradedPair {
  Judgment positive;
  Judgment negative;
  int g_plus = 0;
  int g_minus = 0;
  double weight = 0.0;
};

/// Cartesian product of accepted x rejected judgments, restricted to pairs
/// sharing a triple id. Positive index is the major order.
std::vector<GradedPair> build_pairs(std::span<const Judgment> judgments, const GradeConfig& cfg);

// ---------------------------------------------------------------------------
// Sampling judgments

struct Generation {
  std::string text;
  /// Per-token log-probabilities of the generated text, when the provider has them.
  std::optional<std::vector<double>> token_logprobs;
};

/// (prompt text, sampling config) -> raw generation.
using JudgmentProvider = std::function<Generation(const std::string& prompt, const SamplingConfig& cfg)>;

/// Scores `generation` as a continuation of `prompt`, returning per-token
/// log-probabilities. Used when a provider returns no log-probs.
using Rescorer = std::function<std::vector<double>(const std::string& prompt, const std::string& generation)>;

struct RefineOptions {
  std::size_t k = 5;
  double threshold_p = 0.5;
  /// Extra attempts for a sample whose output fails to parse.
  std::size_t parse_retries = 2;
  /// Temperature of sample i is base * (jitter_low + (jitter_high - jitter_low) * i / (k - 1)).
  double jitter_low = 0.8;
  double jitter_high = 1.2;
  ProviderKind provider_kind = ProviderKind::Internal;
  Rescorer rescorer;
};

/// Temperature for sample `index` of `k`.
double jittered_temperature(double base, std::size_t index, std::size_t k, const RefineOptions& opts);

/// Seed of attempt `retry` for sample `index`: base + index + retry * k.
std::uint64_t attempt_seed(std::uint64_t base_seed, std::size_t index, std::size_t retry, std::size_t k) noexcept;

/// Turns one raw generation into a scored, classified judgment, or a parse
/// error. Throws ProviderError if no log-probs are available from either the
/// generation or `opts.rescorer`.
std::variant<Judgment, ParseError> judge_generation(const LabeledTriple& triple, const JudgmentPrompt& prompt,
                                                    const Generation& generation, std::uint64_t seed,
                                                    const PplScoreConfig& scoring, const RefineOptions& opts);

struct SampleResult {
  std::vector<Judgment> judgments;
  std::size_t failed_attempts = 0;  // unparseable generations, retries included
  std::size_t dropped_samples = 0;  // samples that never parsed
};

/// k judgments for one triple. Sample i uses seed base_cfg.seed + i, a
/// jittered temperature, and its own answer order; unparseable outputs are
/// retried `parse_retries` times and then dropped. Provider exceptions are
/// rethrown as ProviderError naming the triple.
SampleResult sample_judgments(const LabeledTriple& triple, const JudgmentProvider& provider,
                              const SamplingConfig& base_cfg, const PplScoreConfig& scoring,
                              const RefineOptions& opts);

}  // namespace gfriend
