#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gfriend/consistency_lab.hpp"
#include "gfriend/mdpo.hpp"
#include "gfriend/sampling.hpp"
#include "gfriend/scoring.hpp"
#include "gfriend/toy_lm.hpp"
#include "gfriend/trainer.hpp"

namespace gfriend {

/// Every knob of a run. Loaded from a flat `key = value` file with `#`
/// comments; keys are the field names below, with `sft_` / `mdpo_` prefixes
/// on the two training configs (e.g. `mdpo_peak_learning_rate`).
struct RunConfig {
  std::uint64_t seed = 1;

  Architecture architecture;
  double init_scale = 1.0;

  SamplingConfig sampling;
  PplScoreConfig scoring;
  GradeConfig grades;
  double threshold_p = 0.5;
  std::size_t k = 5;
  std::size_t parse_retries = 2;
  double jitter_low = 0.8;
  double jitter_high = 1.2;

  TrainConfig sft = TrainConfig::desk_preset(Stage::Sft);
  TrainConfig mdpo = TrainConfig::desk_preset(Stage::Mdpo);

  // consistency lab
  std::size_t item_count = 8;
  double score_spread = 3.5;
  Spacing spacing = Spacing::Even;
  std::vector<std::size_t> n_grid = {1000, 5000, 50000};
  double label_noise = 0.0;
  FitOptions fit;

  // ablation
  std::size_t ablation_seeds = 5;
  std::size_t sft_size = 0;  // SFT records used per run; 0 means all

  // paths, relative to the working directory
  std::string triples_path;
  std::string sft_path;
  std::string heldout_path;
  std::string judgments_path;
  std::string pairs_path;
  std::string checkpoint_path;
  std::string reference_path;
  std::string output_dir = ".";

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Throws ConfigError naming the line for unknown keys or bad values.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);
/// Inverse of parse_run_config: every key with its current value.
void write_run_config(std::ostream& out, const RunConfig& cfg);

}  // namespace gfriend
