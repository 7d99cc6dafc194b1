#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gfriend/judge_codec.hpp"
#include "gfriend/refinement.hpp"
#include "gfriend/run_config.hpp"
#include "gfriend/synthesize.hpp"
#include "gfriend/trainer.hpp"

namespace gfriend {

RefineOptions refine_options(const RunConfig& cfg);

struct RefineCounts {
  std::size_t triples = 0;
  std::size_t judgments = 0;
  std::size_t failed_attempts = 0;
  std::size_t dropped_samples = 0;
  std::size_t pairs = 0;
  std::map<PreferenceLevel, std::size_t> levels;
};

struct RefineOutput {
  std::vector<Judgment> judgments;  // input order, sample order within a triple
  std::vector<GradedPair> pairs;
  RefineCounts counts;
};

/// Sampling seed base for the triple at `index`.
std::uint64_t refine_seed(std::uint64_t root_seed, std::size_t index) noexcept;

/// sample_judgments + build_pairs over every triple.
RefineOutput refine_corpus(std::span<const LabeledTriple> triples, const JudgmentProvider& provider,
                           const RunConfig& cfg, const RefineOptions& opts);

/// Token-level preference pairs: each side is the judgment's own prompt (rebuilt
/// from its seed) and its encoded judgment, cut to the tokens that fit in
/// `context_window` after the prompt. Throws DataError when a pair names an
/// unknown triple and ContextExceededError when a prompt alone fills the window.
PairBatch to_preference_pairs(std::span<const GradedPair> pairs, std::span<const LabeledTriple> triples,
                              const JudgeCodec& codec, std::size_t context_window);

/// Pairs straight from the labels, with no reasoning: the accepted side says
/// `<ans>` followed by the accepted position, the rejected side the other
/// position; both carry strong grades.
PairBatch label_pairs(std::span<const LabeledTriple> triples, const JudgeCodec& codec, const GradeConfig& grades,
                      std::uint64_t seed);

std::vector<SftExample> to_sft_examples(std::span<const SftRecord> records, const JudgeCodec& codec);

/// Greedy judge accuracy of the toy model on `triples`.
EvalResult evaluate_model(const PolicyModel& model, const JudgeCodec& codec, std::span<const LabeledTriple> triples,
                          const RunConfig& cfg, std::uint64_t order_seed);

// ---------------------------------------------------------------------------
// Ablation

enum class Variant { SftOnly, NoMdpo, NoCots, Full };

/// "sft_only", "no_mdpo", "no_cots", "full"; throws ArgumentError otherwise.
Variant variant_from_string(std::string_view name);
std::string_view to_string(Variant v) noexcept;

struct AblationRow {
  Variant variant = Variant::Full;
  std::vector<double> accuracies;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one seed
};

struct AblationData {
  std::vector<LabeledTriple> triples;  // preference data for refinement
  std::vector<SftRecord> sft;          // CoT supervision
  std::vector<LabeledTriple> heldout;
};

/// For every seed: SFT once from a fresh model, refine with the SFT model,
/// then train and evaluate each variant from that same checkpoint. Variants
/// are reported in the order given.
std::vector<AblationRow> run_ablation(std::span<const Variant> variants, const AblationData& data,
                                      const RunConfig& cfg);

/// Tab-separated table: variant, mean, stddev, then one column per seed.
void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace gfriend
