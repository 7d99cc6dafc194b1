#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfriend/pipeline.hpp"
#include "gfriend/run_config.hpp"

namespace gfriend {

// File-level operations behind the command-line tool. Every command writes
// into `out_dir`; data files depend only on the config and inputs, and run
// reports keep timestamps and timings on '#' header lines.

namespace files {
inline constexpr const char* kTriples = "triples.jsonl";
inline constexpr const char* kSft = "sft.jsonl";
inline constexpr const char* kHeldout = "heldout.jsonl";
inline constexpr const char* kJudgments = "judgments.jsonl";
inline constexpr const char* kPairs = "graded_pairs.jsonl";
inline constexpr const char* kPrompts = "prompts.jsonl";
inline constexpr const char* kRefineReport = "refine_report.txt";
inline constexpr const char* kEvalReport = "eval_report.txt";
inline constexpr const char* kConsistency = "consistency.tsv";
inline constexpr const char* kAblation = "ablation.tsv";
}  // namespace files

using ReportEntries = std::vector<std::pair<std::string, std::string>>;

/// `# title`, `# generated <UTC time>`, `# wall_clock_seconds <t>`, then one
/// `key = value` line per entry.
void write_report(const std::filesystem::path& path, const std::string& title, const ReportEntries& entries,
                  double wall_clock_seconds);

/// The same file minus its '#' lines.
std::string report_body(const std::filesystem::path& path);

struct SynthesizeCounts {
  std::size_t triples = 0;
  std::size_t sft = 0;
  std::size_t heldout = 0;
};

/// Writes triples.jsonl, sft.jsonl and heldout.jsonl.
SynthesizeCounts cmd_synthesize(SynthTask task, std::size_t size, std::size_t heldout_size, std::uint64_t seed,
                                const std::filesystem::path& out_dir);

/// Judgments, graded pairs and a counts report for every triple in
/// `triples_path`, using `provider`.
RefineCounts refine_files(const RunConfig& cfg, const std::filesystem::path& triples_path,
                          const std::filesystem::path& out_dir, const JudgmentProvider& provider);

/// refine_files with the toy model loaded from cfg.checkpoint_path.
RefineCounts cmd_refine(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Trains one stage and writes `<stage>.ckpt` and `<stage>_report.txt`.
///
/// sft: fresh model seeded from cfg.seed, corpus from cfg.sft_path.
/// mdpo: reference from cfg.reference_path (ConfigError when unset or
/// missing), policy initialised from cfg.checkpoint_path or the reference,
/// pairs from cfg.pairs_path resolved against cfg.judgments_path and
/// cfg.triples_path.
/// When cfg.heldout_path is set the report includes held-out accuracy.
RunReport cmd_train(const RunConfig& cfg, Stage stage, const std::filesystem::path& out_dir);

/// Greedy judge accuracy of cfg.checkpoint_path on cfg.heldout_path. When
/// cfg.triples_path is set, refuses (OverlapError) if any held-out question
/// also occurs there.
EvalResult cmd_eval(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Exports k judging prompts per triple of cfg.triples_path, with the same
/// seeds, answer orders and temperatures the internal sampler would use.
std::size_t cmd_provider_export(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Reads completions for previously exported prompts and turns them into
/// judgments and graded pairs. Completions without log-probs are rescored with
/// cfg.checkpoint_path. Throws DataError for ids that match no prompt.
RefineCounts cmd_provider_ingest(const RunConfig& cfg, const std::filesystem::path& prompts_path,
                                 const std::filesystem::path& completions_path,
                                 const std::filesystem::path& out_dir);

std::vector<ConsistencyRow> cmd_consistency(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Runs the ablation on cfg.triples_path / cfg.sft_path / cfg.heldout_path.
std::vector<AblationRow> cmd_ablation(const RunConfig& cfg, std::span<const Variant> variants,
                                      const std::filesystem::path& out_dir);

}  // namespace gfriend
