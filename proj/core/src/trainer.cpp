#include "gfriend/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(peak_learning_rate >= 0.0) || !std::isfinite(peak_learning_rate))
    throw ConfigError("peak_learning_rate must be >= 0");
  if (!(min_learning_rate >= 0.0) || min_learning_rate > peak_learning_rate)
    throw ConfigError("min_learning_rate must lie in [0, peak_learning_rate]");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ConfigError("warmup_fraction must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_epsilon >= 0.0)) throw ConfigError("adam_epsilon must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
}

TrainConfig TrainConfig::paper_preset(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.epochs = stage == Stage::Sft ? 5 : 3;
  c.batch_size = stage == Stage::Sft ? 48 : 128;
  c.peak_learning_rate = 1e-5;
  c.warmup_fraction = 0.1;
  c.schedule = Schedule::Cosine;
  return c;
}

TrainConfig TrainConfig::desk_preset(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.epochs = stage == Stage::Sft ? 5 : 3;
  c.batch_size = 32;
  c.peak_learning_rate = stage == Stage::Sft ? 1e-2 : 2e-3;
  c.warmup_fraction = 0.1;
  c.schedule = Schedule::Cosine;
  return c;
}

double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return cfg.peak_learning_rate;
  const auto warmup =
      static_cast<std::size_t>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps)));
  if (warmup > 0 && step <= warmup)
    return cfg.peak_learning_rate * static_cast<double>(step) / static_cast<double>(warmup);
  if (cfg.schedule == Schedule::Constant || total_steps == warmup) return cfg.peak_learning_rate;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  const double pi = std::acos(-1.0);
  return cfg.min_learning_rate +
         (cfg.peak_learning_rate - cfg.min_learning_rate) * 0.5 * (1.0 + std::cos(pi * progress));
}

AdamW::AdamW(std::size_t n, double beta1, double beta2, double epsilon, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(epsilon), wd_(weight_decay), m_(n, 0.0), v_(n, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ArgumentError("AdamW size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double denom = std::sqrt(v_[i] / c2) + eps_;
    const double update = denom > 0.0 ? (m_[i] / c1) / denom : 0.0;
    params[i] -= lr * (update + wd_ * params[i]);
  }
}

namespace {

// Fisher-Yates with a portable index draw.
void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_interval(rng()) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
}

class DivergenceGuard {
 public:
  DivergenceGuard(double factor, std::size_t patience) : factor_(factor), patience_(patience) {}

  void observe(std::size_t step, double loss) {
    if (!initial_) initial_ = loss;
    const bool bad = !std::isfinite(loss) || loss > factor_ * *initial_;
    streak_ = bad ? streak_ + 1 : 0;
    if (patience_ > 0 && streak_ >= patience_)
      throw DivergenceError("loss diverged: step " + std::to_string(step) + " loss " + std::to_string(loss) +
                            " stayed above " + std::to_string(factor_) + "x the initial loss " +
                            std::to_string(*initial_) + " for " + std::to_string(streak_) + " steps");
  }

 private:
  double factor_;
  std::size_t patience_;
  std::optional<double> initial_;
  std::size_t streak_ = 0;
};

// Generic mini-batch loop shared by both stages. `loss_and_grad` returns the
// batch loss and fills the gradient.
template <typename Item, typename LossFn>
void train_loop(PolicyModel& model, std::span<const Item> data, const TrainConfig& cfg, const TrainHooks& hooks,
                RunReport& report, LossFn&& loss_and_grad) {
  const std::size_t n = data.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = per_epoch * cfg.epochs;
  AdamW opt(model.parameters().size(), cfg);
  DivergenceGuard guard(cfg.divergence_factor, cfg.divergence_patience);
  std::vector<std::size_t> order(n);
  std::vector<Item> batch;
  std::vector<double> grad;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, derive_seed(cfg.seed, "shuffle", epoch));
    for (std::size_t b = 0; b < per_epoch; ++b) {
      batch.clear();
      for (std::size_t i = b * cfg.batch_size; i < std::min(n, (b + 1) * cfg.batch_size); ++i)
        batch.push_back(data[order[i]]);
      ++step;
      const double loss = loss_and_grad(std::span<const Item>(batch), grad);
      report.loss_series.push_back(loss);
      guard.observe(step, loss);
      opt.step(model.parameters(), grad, learning_rate(cfg, step, total));
      if (hooks.on_step) hooks.on_step(step, model.parameters());
      if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step != total)
        hooks.on_checkpoint(step, model);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(step, model);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult run_sft(PolicyModel model, std::span<const SftExample> corpus, const TrainConfig& cfg,
                    const TrainHooks& hooks) {
  if (corpus.empty()) throw ArgumentError("sft corpus is empty");
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.stage = Stage::Sft;
  report.initial_loss = sft_loss(model, corpus);
  train_loop(model, corpus, cfg, hooks, report, [&](std::span<const SftExample> batch, std::vector<double>& grad) {
    auto lg = sft_loss_and_grad(model, batch);
    grad = std::move(lg.grad);
    return lg.loss;
  });
  report.final_loss = sft_loss(model, corpus);
  report.counts["examples"] = corpus.size();
  report.counts["steps"] = report.loss_series.size();
  if (hooks.evaluate) report.heldout_accuracy = hooks.evaluate(model);
  report.wall_clock_seconds = seconds_since(t0);
  return {std::move(model), std::move(report)};
}

TrainResult run_mdpo(PolicyModel model, const PolicyModel& reference, PairBatch pairs, const TrainConfig& cfg,
                     const GradeConfig& grades, PairWeighting weighting, const TrainHooks& hooks) {
  if (pairs.empty()) throw ArgumentError("pair list is empty");
  cfg.validate();
  grades.validate();
  if (!model.same_shape(reference)) throw ConfigError("reference model does not match the policy");
  const auto t0 = std::chrono::steady_clock::now();
  cache_reference_logprobs(reference, pairs);

  auto full_loss = [&](const PolicyModel& m) {
    if (weighting == PairWeighting::Dpo) {
      GradeConfig flat = grades;
      flat.alpha = 0.0;
      return mdpo_loss(m, reference, pairs, flat) / std::log(2.0);
    }
    return mdpo_loss(m, reference, pairs, grades);
  };

  RunReport report;
  report.stage = Stage::Mdpo;
  report.initial_loss = full_loss(model);
  train_loop(model, std::span<const PreferencePair>(pairs), cfg, hooks, report,
             [&](std::span<const PreferencePair> batch, std::vector<double>& grad) {
               auto lg = weighting == PairWeighting::Dpo ? dpo_loss_and_grad(model, reference, batch, grades.beta)
                                                         : mdpo_loss_and_grad(model, reference, batch, grades);
               grad = std::move(lg.grad);
               return lg.loss;
             });
  report.final_loss = full_loss(model);
  report.counts["pairs"] = pairs.size();
  report.counts["steps"] = report.loss_series.size();
  for (const auto& p : pairs)
    ++report.counts["pairs_g" + std::to_string(p.g_plus) + "_g" + std::to_string(p.g_minus)];
  if (hooks.evaluate) report.heldout_accuracy = hooks.evaluate(model);
  report.wall_clock_seconds = seconds_since(t0);
  return {std::move(model), std::move(report)};
}

EvalResult evaluate_judge(const JudgmentProvider& provider, std::span<const LabeledTriple> triples,
                          const SamplingConfig& sampling, const PplScoreConfig& scoring, double threshold_p,
                          std::uint64_t order_seed) {
  EvalResult r;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto seed = derive_seed(order_seed, "eval-order", i);
    const auto prompt = build_judgment_prompt(triples[i], seed);
    SamplingConfig cfg = sampling;
    cfg.seed = seed;
    const auto gen = provider(prompt.text, cfg);
    ++r.total;
    const auto parsed = parse_judgment(gen.text);
    const auto* pj = std::get_if<ParsedJudgment>(&parsed);
    if (!pj) {
      ++r.parse_failures;
      continue;
    }
    const bool correct = pj->chosen == prompt.a_plus_position;
    if (correct) ++r.correct;
    if (gen.token_logprobs && !gen.token_logprobs->empty()) {
      const double score = std::max(ppl_score(perplexity(*gen.token_logprobs), scoring), 1e-300);
      ++r.level_counts[classify(score, correct, threshold_p)];
    }
  }
  return r;
}

}  // namespace gfriend
