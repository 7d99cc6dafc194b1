#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "gfriend/refinement.hpp"
#include "gfriend/toy_lm.hpp"

namespace gfriend {

/// Maps judging prompts and JSON judgments onto the toy vocabulary.
///
/// A prompt becomes `<q> question-words <a1> answer1-words <a2> answer2-words <j>`;
/// a judgment becomes `cot-words <ans> Answer1|Answer2 <eos>`. Generated token
/// streams are rendered back into JSON text, so the toy model is consumed
/// through the same text interface as any external provider. A stream
/// without `<ans>` renders with no "Chosen answer" key and therefore fails to
/// parse, exactly like a malformed external generation.
class JudgeCodec {
 public:
  explicit JudgeCodec(std::shared_ptr<const Vocabulary> vocab);

  /// Special tokens followed by the symbols used by the synthetic tasks.
  static std::shared_ptr<const Vocabulary> default_vocabulary();

  const Vocabulary& vocabulary() const noexcept { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocabulary_ptr() const noexcept { return vocab_; }

  /// Throws ArgumentError if the Question/Answer lines are missing and
  /// VocabularyError on words outside the vocabulary.
  TokenSequence encode_prompt(std::string_view prompt_text) const;
  TokenSequence encode_judgment(const ParsedJudgment& judgment) const;
  /// Parses JSON judgment text first; throws ArgumentError if it does not parse.
  TokenSequence encode_judgment_text(std::string_view judgment_text) const;
  std::string render_generation(const TokenSequence& continuation) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  TokenId q_, a1_, a2_, j_, ans_, answer1_, answer2_;
};

/// The toy model as a judgment provider: encode prompt, sample, render JSON.
JudgmentProvider make_internal_provider(const PolicyModel& model, const JudgeCodec& codec);

/// Scores external judgment text under the toy model (unfiltered
/// distribution) for providers that return no log-probs.
Rescorer make_internal_rescorer(const PolicyModel& model, const JudgeCodec& codec);

}  // namespace gfriend
