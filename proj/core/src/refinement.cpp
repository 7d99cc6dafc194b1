#include "gfriend/refinement.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"
#include "json.hpp"

namespace gfriend {

using nlohmann::json;

void LabeledTriple::validate() const {
  if (id.empty() || question.empty() || accepted.empty() || rejected.empty())
    throw ArgumentError("triple '" + id + "' has an empty field");
  if (accepted == rejected) throw ArgumentError("triple '" + id + "' has identical accepted and rejected answers");
}

namespace {

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// [begin, end) of the first balanced {...} in text, honoring string literals.
std::optional<std::pair<std::size_t, std::size_t>> first_balanced_object(std::string_view text) {
  const auto start = text.find('{');
  if (start == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return std::make_pair(start, i + 1);
  }
  return std::nullopt;
}

const json* find_key(const json& obj, std::string_view key) {
  const auto want = lower_trim(key);
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (lower_trim(it.key()) == want) return &it.value();
  return nullptr;
}

}  // namespace

std::optional<AnswerPosition> answer_from_string(std::string_view s) {
  const auto v = lower_trim(s);
  if (v == "answer 1" || v == "answer1" || v == "1") return AnswerPosition::Answer1;
  if (v == "answer 2" || v == "answer2" || v == "2") return AnswerPosition::Answer2;
  return std::nullopt;
}

AnswerPosition accepted_position(std::uint64_t order_seed) noexcept {
  return (mix64(order_seed ^ 0x5bd1e995ULL) & 1ULL) ? AnswerPosition::Answer2 : AnswerPosition::Answer1;
}

JudgmentPrompt build_judgment_prompt(const LabeledTriple& triple, std::uint64_t order_seed) {
  JudgmentPrompt p;
  p.a_plus_position = accepted_position(order_seed);
  const bool plus_first = p.a_plus_position == AnswerPosition::Answer1;
  const auto& first = plus_first ? triple.accepted : triple.rejected;
  const auto& second = plus_first ? triple.rejected : triple.accepted;
  p.text = "Question: " + triple.question + "\nAnswer 1: " + first + "\nAnswer 2: " + second +
           "\nCompare the two answers step by step and decide which one is better. Reply with a JSON object "
           "holding your reasoning under \"CoT\" and your verdict (\"Answer 1\" or \"Answer 2\") under "
           "\"Chosen answer\".";
  return p;
}

std::string_view to_string(ParseErrorKind k) noexcept {
  switch (k) {
    case ParseErrorKind::NoJsonObject: return "no_json_object";
    case ParseErrorKind::MalformedJson: return "malformed_json";
    case ParseErrorKind::MissingCot: return "missing_cot";
    case ParseErrorKind::MissingChosenAnswer: return "missing_chosen_answer";
    case ParseErrorKind::UnrecognizedAnswer: return "unrecognized_answer";
  }
  return "?";
}

ParseResult parse_judgment(std::string_view text) {
  const auto span = first_balanced_object(text);
  if (!span) return ParseError{ParseErrorKind::NoJsonObject, "no balanced JSON object"};
  const auto obj = json::parse(text.substr(span->first, span->second - span->first), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) return ParseError{ParseErrorKind::MalformedJson, "invalid JSON object"};

  const json* cot = find_key(obj, "CoT");
  if (!cot || !cot->is_string()) return ParseError{ParseErrorKind::MissingCot, "missing \"CoT\""};
  const json* chosen = find_key(obj, "Chosen answer");
  if (!chosen) return ParseError{ParseErrorKind::MissingChosenAnswer, "missing \"Chosen answer\""};

  std::optional<AnswerPosition> pos;
  if (chosen->is_string()) pos = answer_from_string(chosen->get<std::string>());
  else if (chosen->is_number_integer()) pos = answer_from_string(std::to_string(chosen->get<long long>()));
  if (!pos) return ParseError{ParseErrorKind::UnrecognizedAnswer, "unrecognized answer " + chosen->dump()};
  return ParsedJudgment{cot->get<std::string>(), *pos};
}

std::string render_judgment(const ParsedJudgment& j) {
  nlohmann::ordered_json out;
  out["CoT"] = j.cot;
  out["Chosen answer"] = std::string(to_string(j.chosen));
  return out.dump();
}

PreferenceLevel classify(double score, bool correct, double threshold_p) {
  if (!(score > 0.0 && score < 1.0)) throw ArgumentError("score must lie in (0, 1), got " + std::to_string(score));
  if (!(threshold_p > 0.0 && threshold_p < 1.0))
    throw ArgumentError("threshold must lie in (0, 1), got " + std::to_string(threshold_p));
  const bool strong = score > threshold_p;
  if (correct) return strong ? PreferenceLevel::StrongAccept : PreferenceLevel::WeakAccept;
  return strong ? PreferenceLevel::StrongReject : PreferenceLevel::WeakReject;
}

std::vector<GradedPair> build_pairs(std::span<const Judgment> judgments, const GradeConfig& cfg) {
  std::vector<GradedPair> pairs;
  for (const auto& pos : judgments) {
    if (!is_accept(pos.level)) continue;
    for (const auto& neg : judgments) {
      if (is_accept(neg.level) || neg.triple_id != pos.triple_id) continue;
      GradedPair p{pos, neg, grade_value(pos.level, cfg), grade_value(neg.level, cfg), 0.0};
      p.weight = weight(p.g_plus, p.g_minus, cfg.alpha);
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

double jittered_temperature(double base, std::size_t index, std::size_t k, const RefineOptions& opts) {
  if (k <= 1) return base;
  const double t = static_cast<double>(index) / static_cast<double>(k - 1);
  return base * (opts.jitter_low + (opts.jitter_high - opts.jitter_low) * t);
}

std::uint64_t attempt_seed(std::uint64_t base_seed, std::size_t index, std::size_t retry, std::size_t k) noexcept {
  return base_seed + index + retry * k;
}

std::variant<Judgment, ParseError> judge_generation(const LabeledTriple& triple, const JudgmentPrompt& prompt,
                                                    const Generation& generation, std::uint64_t seed,
                                                    const PplScoreConfig& scoring, const RefineOptions& opts) {
  auto parsed = parse_judgment(generation.text);
  if (auto* err = std::get_if<ParseError>(&parsed)) return *err;
  auto& pj = std::get<ParsedJudgment>(parsed);

  Judgment j;
  j.triple_id = triple.id;
  j.cot = std::move(pj.cot);
  j.chosen = pj.chosen;
  j.correct = pj.chosen == prompt.a_plus_position;
  j.provider = opts.provider_kind;
  j.seed = seed;

  std::vector<double> logprobs;
  if (generation.token_logprobs) {
    logprobs = *generation.token_logprobs;
    j.score_source = ScoreSource::Provider;
  } else if (opts.rescorer) {
    logprobs = opts.rescorer(prompt.text, generation.text);
    j.score_source = ScoreSource::InternalRescore;
  } else {
    throw ProviderError("triple " + triple.id + ": generation has no log-probs and no rescorer is configured");
  }
  for (double lp : logprobs)
    if (!(lp <= 0.0) || std::isinf(lp))
      throw ProviderError("triple " + triple.id + ": invalid token log-probability " + std::to_string(lp));
  j.ppl = perplexity(logprobs);
  // Underflow guard for very large perplexities from external providers.
  j.score = std::max(ppl_score(j.ppl, scoring), std::numeric_limits<double>::min());
  j.level = classify(j.score, j.correct, opts.threshold_p);
  return j;
}

SampleResult sample_judgments(const LabeledTriple& triple, const JudgmentProvider& provider,
                              const SamplingConfig& base_cfg, const PplScoreConfig& scoring,
                              const RefineOptions& opts) {
  if (opts.k == 0) throw ArgumentError("k must be >= 1");
  triple.validate();
  SampleResult result;
  for (std::size_t i = 0; i < opts.k; ++i) {
    bool done = false;
    for (std::size_t r = 0; r <= opts.parse_retries && !done; ++r) {
      const auto seed = attempt_seed(base_cfg.seed, i, r, opts.k);
      const auto prompt = build_judgment_prompt(triple, seed);
      SamplingConfig cfg = base_cfg;
      cfg.seed = seed;
      cfg.temperature = jittered_temperature(base_cfg.temperature, i, opts.k, opts);

      Generation gen;
      try {
        gen = provider(prompt.text, cfg);
      } catch (const std::exception& e) {
        throw ProviderError("triple " + triple.id + ": provider failed: " + e.what());
      }
      auto outcome = judge_generation(triple, prompt, gen, seed, scoring, opts);
      if (auto* j = std::get_if<Judgment>(&outcome)) {
        result.judgments.push_back(std::move(*j));
        done = true;
      } else {
        ++result.failed_attempts;
      }
    }
    if (!done) ++result.dropped_samples;
  }
  return result;
}

}  // namespace gfriend
