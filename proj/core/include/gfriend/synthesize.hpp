#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gfriend/refinement.hpp"

namespace gfriend {

enum class SynthTask { Majority, Order };

/// Throws ArgumentError for unknown task names.
SynthTask synth_task_from_string(std::string_view name);
std::string_view to_string(SynthTask t) noexcept;

/// (question, CoT) supervision: the judging prompt and the JSON judgment text.
struct SftRecord {
  std::string question;
  std::string cot;
  bool operator==(const SftRecord&) const = default;
};

struct SynthCorpus {
  std::vector<LabeledTriple> triples;
  std::vector<SftRecord> sft;  // one per triple, same order
  std::vector<LabeledTriple> heldout;
};

/// Deterministic toy preference corpus over the judge vocabulary.
///
/// majority: the question lists 7 symbols from {a, b, c, d} with a unique
///   most frequent symbol; the accepted answer names it and the rejected
///   answer names a less frequent symbol that occurs. The CoT gives the count
///   of each presented answer's symbol: "x cx y cy".
/// order: the question lists 4 distinct digits; the accepted answer is the
///   ascending sort and the rejected one swaps an adjacent pair of it. The CoT
///   says whether each presented answer is sorted: "yes no".
///
/// Questions are unique across the training and held-out splits. Throws
/// ArgumentError when size < 1.
SynthCorpus synthesize(SynthTask task, std::size_t size, std::size_t heldout_size, std::uint64_t seed);

/// Gold judgment for a triple presented with the accepted answer at `a_plus`.
ParsedJudgment gold_judgment(SynthTask task, const LabeledTriple& triple, AnswerPosition a_plus);

}  // namespace gfriend
