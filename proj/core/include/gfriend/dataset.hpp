#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfriend/refinement.hpp"
#include "gfriend/sampling.hpp"
#include "gfriend/synthesize.hpp"

namespace gfriend {

// Line-delimited JSON datasets. Every record carries "schema_version" and
// "kind"; readers reject other versions and kinds with a DataError naming the
// 1-based line. Blank lines are skipped.

inline constexpr int kSchemaVersion = 1;

/// A graded pair as stored on disk: the two judgments are referenced by their
/// seeds within the triple.
struct GradedPairRecord {
  std::string triple_id;
  std::uint64_t pos_ref = 0;
  std::uint64_t neg_ref = 0;
  int g_plus = 0;
  int g_minus = 0;
  double weight = 0.0;
  bool operator==(const GradedPairRecord&) const = default;
};

GradedPairRecord to_record(const GradedPair& p);

/// Rebuilds full pairs from their records. Throws DataError when a reference
/// does not match exactly one judgment.
std::vector<GradedPair> resolve_pairs(std::span<const GradedPairRecord> records, std::span<const Judgment> judgments);

/// One judging request for an external provider.
struct PromptRecord {
  std::string id;  // "<triple_id>#<attempt seed>"
  std::string prompt;
  SamplingConfig sampling;
  bool operator==(const PromptRecord& o) const;
};

/// An external provider's answer to a PromptRecord.
struct CompletionRecord {
  std::string id;
  std::string text;
  std::optional<std::vector<double>> logprobs;
  bool operator==(const CompletionRecord&) const = default;
};

void write_jsonl(std::ostream& out, std::span<const LabeledTriple> records);
void write_jsonl(std::ostream& out, std::span<const Judgment> records);
void write_jsonl(std::ostream& out, std::span<const GradedPairRecord> records);
void write_jsonl(std::ostream& out, std::span<const SftRecord> records);
void write_jsonl(std::ostream& out, std::span<const PromptRecord> records);
void write_jsonl(std::ostream& out, std::span<const CompletionRecord> records);

std::vector<LabeledTriple> read_triples(std::istream& in);
std::vector<Judgment> read_judgments(std::istream& in);
std::vector<GradedPairRecord> read_graded_pairs(std::istream& in);
std::vector<SftRecord> read_sft_examples(std::istream& in);
std::vector<PromptRecord> read_prompts(std::istream& in);
/// Also rejects duplicate ids.
std::vector<CompletionRecord> read_completions(std::istream& in);

/// Throws ConfigError when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

/// FNV-1a of the question text, as 16 lowercase hex digits.
std::string question_hash(const std::string& question);

/// Hashes of held-out questions that also occur in `train`, sorted.
std::vector<std::string> overlapping_questions(std::span<const LabeledTriple> train,
                                               std::span<const LabeledTriple> heldout);

}  // namespace gfriend
