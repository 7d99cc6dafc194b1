#include "gfriend/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

RefineOptions refine_options(const RunConfig& cfg) {
  RefineOptions o;
  o.k = cfg.k;
  o.threshold_p = cfg.threshold_p;
  o.parse_retries = cfg.parse_retries;
  o.jitter_low = cfg.jitter_low;
  o.jitter_high = cfg.jitter_high;
  return o;
}

std::uint64_t refine_seed(std::uint64_t root_seed, std::size_t index) noexcept {
  return derive_seed(root_seed, "refine", index);
}

RefineOutput refine_corpus(std::span<const LabeledTriple> triples, const JudgmentProvider& provider,
                           const RunConfig& cfg, const RefineOptions& opts) {
  RefineOutput out;
  out.counts.triples = triples.size();
  for (std::size_t i = 0; i < triples.size(); ++i) {
    SamplingConfig sampling = cfg.sampling;
    sampling.seed = refine_seed(cfg.seed, i);
    auto res = sample_judgments(triples[i], provider, sampling, cfg.scoring, opts);
    out.counts.failed_attempts += res.failed_attempts;
    out.counts.dropped_samples += res.dropped_samples;
    auto pairs = build_pairs(res.judgments, cfg.grades);
    for (auto& j : res.judgments) {
      ++out.counts.levels[j.level];
      out.judgments.push_back(std::move(j));
    }
    for (auto& p : pairs) out.pairs.push_back(std::move(p));
  }
  out.counts.judgments = out.judgments.size();
  out.counts.pairs = out.pairs.size();
  return out;
}

PairBatch to_preference_pairs(std::span<const GradedPair> pairs, std::span<const LabeledTriple> triples,
                              const JudgeCodec& codec, std::size_t context_window) {
  std::unordered_map<std::string, const LabeledTriple*> by_id;
  for (const auto& t : triples) by_id.emplace(t.id, &t);
  auto side = [&](const Judgment& j) {
    const auto it = by_id.find(j.triple_id);
    if (it == by_id.end()) throw DataError("pair references unknown triple '" + j.triple_id + "'");
    const auto prompt = build_judgment_prompt(*it->second, j.seed);
    auto query = codec.encode_prompt(prompt.text);
    auto answer = codec.encode_judgment({j.cot, j.chosen});
    if (query.size() >= context_window)
      throw ContextExceededError("prompt of triple '" + j.triple_id + "' fills the context window");
    // A generation that reached the window edge ended without <eos>.
    answer.ids.resize(std::min(answer.size(), context_window - query.size()));
    return PreferenceSide{std::move(query), std::move(answer), std::nullopt};
  };
  PairBatch out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({side(p.positive), side(p.negative), p.g_plus, p.g_minus});
  return out;
}

PairBatch label_pairs(std::span<const LabeledTriple> triples, const JudgeCodec& codec, const GradeConfig& grades,
                      std::uint64_t seed) {
  PairBatch out;
  out.reserve(triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto prompt = build_judgment_prompt(triples[i], derive_seed(seed, "label-order", i));
    const auto query = codec.encode_prompt(prompt.text);
    out.push_back({{query, codec.encode_judgment({"", prompt.a_plus_position}), std::nullopt},
                   {query, codec.encode_judgment({"", other(prompt.a_plus_position)}), std::nullopt},
                   grades.strong_accept,
                   grades.strong_reject});
  }
  return out;
}

std::vector<SftExample> to_sft_examples(std::span<const SftRecord> records, const JudgeCodec& codec) {
  std::vector<SftExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({codec.encode_prompt(r.question), codec.encode_judgment_text(r.cot)});
  return out;
}

EvalResult evaluate_model(const PolicyModel& model, const JudgeCodec& codec, std::span<const LabeledTriple> triples,
                          const RunConfig& cfg, std::uint64_t order_seed) {
  SamplingConfig sampling = cfg.sampling;
  sampling.greedy = true;
  return evaluate_judge(make_internal_provider(model, codec), triples, sampling, cfg.scoring, cfg.threshold_p,
                        order_seed);
}

Variant variant_from_string(std::string_view name) {
  if (name == "sft_only") return Variant::SftOnly;
  if (name == "no_mdpo") return Variant::NoMdpo;
  if (name == "no_cots") return Variant::NoCots;
  if (name == "full") return Variant::Full;
  throw ArgumentError("unknown variant '" + std::string(name) + "' (expected sft_only, no_mdpo, no_cots or full)");
}

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::SftOnly: return "sft_only";
    case Variant::NoMdpo: return "no_mdpo";
    case Variant::NoCots: return "no_cots";
    case Variant::Full: return "full";
  }
  return "?";
}

std::vector<AblationRow> run_ablation(std::span<const Variant> variants, const AblationData& data,
                                      const RunConfig& cfg) {
  if (variants.empty()) throw ArgumentError("no variants requested");
  if (data.sft.empty() || data.heldout.empty()) throw ArgumentError("ablation needs SFT records and held-out triples");
  const JudgeCodec codec(JudgeCodec::default_vocabulary());
  const std::size_t sft_n = cfg.sft_size == 0 ? data.sft.size() : std::min(cfg.sft_size, data.sft.size());
  const auto sft_examples = to_sft_examples(std::span(data.sft).first(sft_n), codec);

  std::vector<AblationRow> rows(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) rows[v].variant = variants[v];

  for (std::size_t s = 0; s < cfg.ablation_seeds; ++s) {
    RunConfig run = cfg;
    run.seed = derive_seed(cfg.seed, "ablation", s);
    run.sft.seed = derive_seed(run.seed, "sft", 0);
    run.mdpo.seed = derive_seed(run.seed, "mdpo", 0);
    const auto eval_seed = derive_seed(run.seed, "eval", 0);

    auto init = PolicyModel::random(codec.vocabulary_ptr(), cfg.architecture, derive_seed(run.seed, "init", 0),
                                    cfg.init_scale);
    const auto sft = run_sft(std::move(init), sft_examples, run.sft).model;

    PairBatch cot_pairs;
    bool refined = false;
    auto ensure_refined = [&] {
      if (refined) return;
      const auto out = refine_corpus(data.triples, make_internal_provider(sft, codec), run, refine_options(run));
      cot_pairs = to_preference_pairs(out.pairs, data.triples, codec, sft.architecture().context_window);
      refined = true;
    };

    for (std::size_t v = 0; v < variants.size(); ++v) {
      double acc = 0.0;
      switch (variants[v]) {
        case Variant::SftOnly:
          acc = evaluate_model(sft, codec, data.heldout, run, eval_seed).accuracy();
          break;
        case Variant::NoMdpo:
        case Variant::Full: {
          ensure_refined();
          if (cot_pairs.empty()) {
            // Nothing to prefer: the preference stage is a no-op.
            acc = evaluate_model(sft, codec, data.heldout, run, eval_seed).accuracy();
            break;
          }
          const auto weighting = variants[v] == Variant::Full ? PairWeighting::Mdpo : PairWeighting::Dpo;
          const auto trained = run_mdpo(sft, sft, cot_pairs, run.mdpo, run.grades, weighting).model;
          acc = evaluate_model(trained, codec, data.heldout, run, eval_seed).accuracy();
          break;
        }
        case Variant::NoCots: {
          const auto pairs = label_pairs(data.triples, codec, run.grades, derive_seed(run.seed, "labels", 0));
          const auto trained = run_mdpo(sft, sft, pairs, run.mdpo, run.grades, PairWeighting::Mdpo).model;
          acc = evaluate_model(trained, codec, data.heldout, run, eval_seed).accuracy();
          break;
        }
      }
      rows[v].accuracies.push_back(acc);
    }
  }

  for (auto& r : rows) {
    const double n = static_cast<double>(r.accuracies.size());
    r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
    r.stddev = r.accuracies.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return rows;
}

void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows) {
  const std::size_t seeds = rows.empty() ? 0 : rows.front().accuracies.size();
  out << "variant\tmean_accuracy\tstddev";
  for (std::size_t s = 0; s < seeds; ++s) out << "\tseed" << s;
  out << '\n';
  char buf[32];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << to_string(r.variant) << '\t' << num(r.mean) << '\t' << num(r.stddev);
    for (double a : r.accuracies) out << '\t' << num(a);
    out << '\n';
  }
}

}  // namespace gfriend
