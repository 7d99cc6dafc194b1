#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfriend/mdpo.hpp"
#include "gfriend/refinement.hpp"
#include "gfriend/toy_lm.hpp"

namespace gfriend {

enum class Stage { Sft, Mdpo };
enum class Schedule { Cosine, Constant };

/// How pairs are weighted in the preference stage. `Dpo` ignores grades.
enum class PairWeighting { Mdpo, Dpo };

struct TrainConfig {
  Stage stage = Stage::Sft;
  std::size_t epochs = 3;
  std::size_t batch_size = 32;
  double peak_learning_rate = 1e-2;
  double min_learning_rate = 0.0;  // cosine floor
  double warmup_fraction = 0.1;
  Schedule schedule = Schedule::Cosine;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // steps; 0 disables

  // AdamW
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;

  // Divergence guard: abort when the step loss stays above
  // divergence_factor * (first step loss) for divergence_patience steps.
  double divergence_factor = 10.0;
  std::size_t divergence_patience = 50;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;

  /// Large-model values (batch 128, 10% warmup, cosine).
  static TrainConfig paper_preset(Stage stage);
  /// Values sized for the toy model.
  static TrainConfig desk_preset(Stage stage);
};

/// Learning rate at 1-based `step` of `total_steps`: linear warmup to the
/// peak over ceil(warmup_fraction * total) steps, then cosine decay to the
/// floor (or constant).
double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t total_steps);

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(std::size_t n, double beta1, double beta2, double epsilon, double weight_decay);
  explicit AdamW(std::size_t n, const TrainConfig& cfg)
      : AdamW(n, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon, cfg.weight_decay) {}
  void step(std::span<double> params, std::span<const double> grad, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  double beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

struct RunReport {
  Stage stage = Stage::Sft;
  std::vector<double> loss_series;  // mini-batch loss per step, before the update
  double initial_loss = 0.0;        // full-dataset loss before training
  double final_loss = 0.0;          // full-dataset loss after training
  std::optional<double> heldout_accuracy;
  std::map<std::string, std::size_t> counts;
  double wall_clock_seconds = 0.0;
};

struct TrainHooks {
  /// Called every checkpoint_every steps and after the last step.
  std::function<void(std::size_t step, const PolicyModel&)> on_checkpoint;
  /// Called after every optimizer step with the new parameters.
  std::function<void(std::size_t step, std::span<const double> params)> on_step;
  /// Held-out judge accuracy, evaluated once after training.
  std::function<double(const PolicyModel&)> evaluate;
};

struct TrainResult {
  PolicyModel model;
  RunReport report;
};

/// CoT SFT: minimizes the continuation NLL with AdamW over shuffled
/// mini-batches. Throws ArgumentError on an empty corpus and DivergenceError
/// when the divergence guard trips.
TrainResult run_sft(PolicyModel model, std::span<const SftExample> corpus, const TrainConfig& cfg,
                    const TrainHooks& hooks = {});

/// Preference stage against a frozen reference. `grades.alpha` and
/// `grades.beta` control the weighting and the implicit reward scale.
TrainResult run_mdpo(PolicyModel model, const PolicyModel& reference, PairBatch pairs, const TrainConfig& cfg,
                     const GradeConfig& grades, PairWeighting weighting = PairWeighting::Mdpo,
                     const TrainHooks& hooks = {});

// ---------------------------------------------------------------------------
// Judge evaluation

struct EvalResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t parse_failures = 0;
  std::map<PreferenceLevel, std::size_t> level_counts;
  double accuracy() const noexcept { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

/// One judgment per triple from `provider` (callers pass greedy decoding for
/// the toy model). Answer order for triple i is drawn from
/// derive_seed(order_seed, "eval-order", i). Unparseable outputs count as wrong.
EvalResult evaluate_judge(const JudgmentProvider& provider, std::span<const LabeledTriple> triples,
                          const SamplingConfig& sampling, const PplScoreConfig& scoring, double threshold_p,
                          std::uint64_t order_seed);

}  // namespace gfriend
