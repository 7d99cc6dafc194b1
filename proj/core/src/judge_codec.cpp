#include "gfriend/judge_codec.hpp"

#include <sstream>

#include "gfriend/errors.hpp"
#include "json.hpp"

namespace gfriend {

namespace {

void append_words(std::string_view text, const Vocabulary& vocab, std::vector<TokenId>& out) {
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(vocab.id(w));
}

std::string_view field_after(std::string_view text, std::string_view label) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = std::min(text.find('\n', pos), text.size());
    const auto line = text.substr(pos, eol - pos);
    if (line.substr(0, label.size()) == label) return line.substr(label.size());
    pos = eol + 1;
  }
  throw ArgumentError("prompt has no '" + std::string(label) + "' line");
}

}  // namespace

JudgeCodec::JudgeCodec(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
  q_ = vocab_->id("<q>");
  a1_ = vocab_->id("<a1>");
  a2_ = vocab_->id("<a2>");
  j_ = vocab_->id("<j>");
  ans_ = vocab_->id("<ans>");
  answer1_ = vocab_->id("Answer1");
  answer2_ = vocab_->id("Answer2");
}

std::shared_ptr<const Vocabulary> JudgeCodec::default_vocabulary() {
  std::vector<std::string> tokens = {"<eos>", "<q>", "<a1>", "<a2>", "<j>", "<ans>", "Answer1", "Answer2",
                                     "a",     "b",   "c",    "d",    "yes", "no"};
  for (int d = 0; d <= 9; ++d) tokens.push_back(std::to_string(d));
  return std::make_shared<const Vocabulary>(std::move(tokens), 0);
}

TokenSequence JudgeCodec::encode_prompt(std::string_view prompt_text) const {
  TokenSequence seq;
  seq.ids.push_back(q_);
  append_words(field_after(prompt_text, "Question:"), *vocab_, seq.ids);
  seq.ids.push_back(a1_);
  append_words(field_after(prompt_text, "Answer 1:"), *vocab_, seq.ids);
  seq.ids.push_back(a2_);
  append_words(field_after(prompt_text, "Answer 2:"), *vocab_, seq.ids);
  seq.ids.push_back(j_);
  return seq;
}

TokenSequence JudgeCodec::encode_judgment(const ParsedJudgment& judgment) const {
  TokenSequence seq;
  append_words(judgment.cot, *vocab_, seq.ids);
  seq.ids.push_back(ans_);
  seq.ids.push_back(judgment.chosen == AnswerPosition::Answer1 ? answer1_ : answer2_);
  seq.ids.push_back(vocab_->eos_id());
  return seq;
}

TokenSequence JudgeCodec::encode_judgment_text(std::string_view judgment_text) const {
  auto parsed = parse_judgment(judgment_text);
  if (auto* err = std::get_if<ParseError>(&parsed))
    throw ArgumentError("judgment text does not parse: " + err->detail);
  return encode_judgment(std::get<ParsedJudgment>(parsed));
}

std::string JudgeCodec::render_generation(const TokenSequence& continuation) const {
  std::string cot;
  std::optional<std::string> answer;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const TokenId t = continuation.ids[i];
    if (t == vocab_->eos_id()) break;
    if (t == ans_) {
      answer = "";
      if (i + 1 < continuation.size()) {
        const TokenId a = continuation.ids[i + 1];
        if (a == answer1_) *answer = "Answer 1";
        else if (a == answer2_) *answer = "Answer 2";
        else if (a != vocab_->eos_id()) *answer = vocab_->token(a);
      }
      break;
    }
    if (!cot.empty()) cot += ' ';
    cot += vocab_->token(t);
  }
  nlohmann::ordered_json out;
  out["CoT"] = cot;
  if (answer) out["Chosen answer"] = *answer;
  return out.dump();
}

JudgmentProvider make_internal_provider(const PolicyModel& model, const JudgeCodec& codec) {
  return [&model, &codec](const std::string& prompt, const SamplingConfig& cfg) {
    const auto trace = sample(model, codec.encode_prompt(prompt), cfg);
    return Generation{codec.render_generation(trace.continuation()), trace.per_token_logprob};
  };
}

Rescorer make_internal_rescorer(const PolicyModel& model, const JudgeCodec& codec) {
  return [&model, &codec](const std::string& prompt, const std::string& generation) {
    return forward_logprobs(model, codec.encode_prompt(prompt), codec.encode_judgment_text(generation))
        .per_token_logprob;
  };
}

}  // namespace gfriend
