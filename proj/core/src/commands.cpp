#include "gfriend/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "gfriend/checkpoint.hpp"
#include "gfriend/dataset.hpp"
#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
void save(const fs::path& path, const std::vector<T>& records) {
  auto out = open_output(path);
  write_jsonl(out, std::span<const T>(records));
}

template <typename Reader>
auto load(const std::string& path, const char* what, Reader reader) {
  if (path.empty()) throw ConfigError(std::string(what) + " is not set");
  auto in = open_input(path);
  return reader(in);
}

void add_counts(ReportEntries& e, const RefineCounts& c) {
  e.emplace_back("triples", std::to_string(c.triples));
  e.emplace_back("judgments", std::to_string(c.judgments));
  e.emplace_back("failed_attempts", std::to_string(c.failed_attempts));
  e.emplace_back("dropped_samples", std::to_string(c.dropped_samples));
  e.emplace_back("pairs", std::to_string(c.pairs));
  for (auto level : kAllLevels) {
    const auto it = c.levels.find(level);
    e.emplace_back("level_" + std::string(to_string(level)), std::to_string(it == c.levels.end() ? 0 : it->second));
  }
}

void add_eval(ReportEntries& e, const EvalResult& r) {
  e.emplace_back("total", std::to_string(r.total));
  e.emplace_back("correct", std::to_string(r.correct));
  e.emplace_back("accuracy", num(r.accuracy()));
  e.emplace_back("parse_failures", std::to_string(r.parse_failures));
  for (auto level : kAllLevels) {
    const auto it = r.level_counts.find(level);
    e.emplace_back("level_" + std::string(to_string(level)),
                   std::to_string(it == r.level_counts.end() ? 0 : it->second));
  }
}

RefineCounts write_refine_outputs(const fs::path& out_dir, const std::vector<Judgment>& judgments,
                                  const std::vector<GradedPair>& pairs, RefineCounts counts, double seconds) {
  save(out_dir / files::kJudgments, judgments);
  std::vector<GradedPairRecord> records;
  records.reserve(pairs.size());
  for (const auto& p : pairs) records.push_back(to_record(p));
  save(out_dir / files::kPairs, records);
  ReportEntries e;
  add_counts(e, counts);
  write_report(out_dir / files::kRefineReport, "refine", e, seconds);
  return counts;
}

void check_overlap(const RunConfig& cfg, std::span<const LabeledTriple> heldout) {
  if (cfg.triples_path.empty()) return;
  const auto train = load(cfg.triples_path, "triples_path", read_triples);
  auto hits = overlapping_questions(train, heldout);
  if (!hits.empty()) throw OverlapError(std::move(hits));
}

}  // namespace

void write_report(const fs::path& path, const std::string& title, const ReportEntries& entries,
                  double wall_clock_seconds) {
  auto out = open_output(path);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out << "# " << title << '\n' << "# generated " << stamp << '\n' << "# wall_clock_seconds " << wall_clock_seconds << '\n';
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

std::string report_body(const fs::path& path) {
  auto in = open_input(path);
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') body += line + '\n';
  return body;
}

SynthesizeCounts cmd_synthesize(SynthTask task, std::size_t size, std::size_t heldout_size, std::uint64_t seed,
                                const fs::path& out_dir) {
  const auto corpus = synthesize(task, size, heldout_size, seed);
  save(out_dir / files::kTriples, corpus.triples);
  save(out_dir / files::kSft, corpus.sft);
  save(out_dir / files::kHeldout, corpus.heldout);
  return {corpus.triples.size(), corpus.sft.size(), corpus.heldout.size()};
}

RefineCounts refine_files(const RunConfig& cfg, const fs::path& triples_path, const fs::path& out_dir,
                          const JudgmentProvider& provider) {
  const auto t0 = Clock::now();
  auto in = open_input(triples_path);
  const auto triples = read_triples(in);
  const auto out = refine_corpus(triples, provider, cfg, refine_options(cfg));
  return write_refine_outputs(out_dir, out.judgments, out.pairs, out.counts, seconds_since(t0));
}

RefineCounts cmd_refine(const RunConfig& cfg, const fs::path& out_dir) {
  if (cfg.checkpoint_path.empty()) throw ConfigError("refine needs checkpoint_path");
  if (cfg.triples_path.empty()) throw ConfigError("refine needs triples_path");
  const auto model = load_checkpoint(cfg.checkpoint_path);
  const JudgeCodec codec(model.vocabulary_ptr());
  return refine_files(cfg, cfg.triples_path, out_dir, make_internal_provider(model, codec));
}

RunReport cmd_train(const RunConfig& cfg, Stage stage, const fs::path& out_dir) {
  const std::string name = stage == Stage::Sft ? "sft" : "mdpo";
  std::optional<std::vector<LabeledTriple>> heldout;
  if (!cfg.heldout_path.empty()) {
    heldout = load(cfg.heldout_path, "heldout_path", read_triples);
    check_overlap(cfg, *heldout);
  }

  TrainHooks hooks;
  hooks.on_checkpoint = [&](std::size_t step, const PolicyModel& m) {
    const auto& tc = stage == Stage::Sft ? cfg.sft : cfg.mdpo;
    if (tc.checkpoint_every > 0) save_checkpoint(out_dir / (name + "-step" + std::to_string(step) + ".ckpt"), m);
  };
  EvalResult eval;
  if (heldout) {
    hooks.evaluate = [&](const PolicyModel& m) {
      eval = evaluate_model(m, JudgeCodec(m.vocabulary_ptr()), *heldout, cfg, derive_seed(cfg.seed, "eval", 0));
      return eval.accuracy();
    };
  }

  TrainResult result = [&] {
    if (stage == Stage::Sft) {
      auto records = load(cfg.sft_path, "sft_path", read_sft_examples);
      if (cfg.sft_size > 0 && cfg.sft_size < records.size()) records.resize(cfg.sft_size);
      const JudgeCodec codec(JudgeCodec::default_vocabulary());
      const auto examples = to_sft_examples(records, codec);
      TrainConfig tc = cfg.sft;
      tc.seed = derive_seed(cfg.seed, "sft", 0);
      auto init = PolicyModel::random(codec.vocabulary_ptr(), cfg.architecture, derive_seed(cfg.seed, "init", 0),
                                      cfg.init_scale);
      return run_sft(std::move(init), examples, tc, hooks);
    }
    if (cfg.reference_path.empty()) throw ConfigError("mdpo needs reference_path");
    const auto reference = load_checkpoint(cfg.reference_path);
    auto policy = cfg.checkpoint_path.empty() ? reference : load_checkpoint(cfg.checkpoint_path);
    const auto triples = load(cfg.triples_path, "triples_path", read_triples);
    const auto judgments = load(cfg.judgments_path, "judgments_path", read_judgments);
    const auto records = load(cfg.pairs_path, "pairs_path", read_graded_pairs);
    const auto graded = resolve_pairs(records, judgments);
    const JudgeCodec codec(reference.vocabulary_ptr());
    TrainConfig tc = cfg.mdpo;
    tc.seed = derive_seed(cfg.seed, "mdpo", 0);
    return run_mdpo(std::move(policy), reference, to_preference_pairs(graded, triples, codec, reference.architecture().context_window), tc, cfg.grades,
                    PairWeighting::Mdpo, hooks);
  }();

  save_checkpoint(out_dir / (name + ".ckpt"), result.model);
  const auto& r = result.report;
  ReportEntries e;
  e.emplace_back("stage", name);
  e.emplace_back("steps", std::to_string(r.loss_series.size()));
  e.emplace_back("initial_loss", num(r.initial_loss));
  e.emplace_back("final_loss", num(r.final_loss));
  for (const auto& [k, v] : r.counts) e.emplace_back("count_" + k, std::to_string(v));
  if (r.heldout_accuracy) {
    e.emplace_back("heldout_accuracy", num(*r.heldout_accuracy));
    e.emplace_back("heldout_parse_failures", std::to_string(eval.parse_failures));
  }
  std::string series;
  for (double l : r.loss_series) series += (series.empty() ? "" : ",") + num(l);
  e.emplace_back("loss_series", series);
  write_report(out_dir / (name + "_report.txt"), name, e, r.wall_clock_seconds);
  return result.report;
}

EvalResult cmd_eval(const RunConfig& cfg, const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const auto heldout = load(cfg.heldout_path, "heldout_path", read_triples);
  check_overlap(cfg, heldout);
  if (cfg.checkpoint_path.empty()) throw ConfigError("eval needs checkpoint_path");
  const auto model = load_checkpoint(cfg.checkpoint_path);
  const auto r = evaluate_model(model, JudgeCodec(model.vocabulary_ptr()), heldout, cfg, derive_seed(cfg.seed, "eval", 0));
  ReportEntries e;
  add_eval(e, r);
  write_report(out_dir / files::kEvalReport, "eval", e, seconds_since(t0));
  return r;
}

std::size_t cmd_provider_export(const RunConfig& cfg, const fs::path& out_dir) {
  const auto triples = load(cfg.triples_path, "triples_path", read_triples);
  const auto opts = refine_options(cfg);
  std::vector<PromptRecord> prompts;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    triples[i].validate();
    const auto base = refine_seed(cfg.seed, i);
    for (std::size_t s = 0; s < cfg.k; ++s) {
      PromptRecord r;
      r.sampling = cfg.sampling;
      r.sampling.seed = attempt_seed(base, s, 0, cfg.k);
      r.sampling.temperature = jittered_temperature(cfg.sampling.temperature, s, cfg.k, opts);
      r.id = triples[i].id + "#" + std::to_string(r.sampling.seed);
      r.prompt = build_judgment_prompt(triples[i], r.sampling.seed).text;
      prompts.push_back(std::move(r));
    }
  }
  save(out_dir / files::kPrompts, prompts);
  return prompts.size();
}

RefineCounts cmd_provider_ingest(const RunConfig& cfg, const fs::path& prompts_path, const fs::path& completions_path,
                                 const fs::path& out_dir) {
  const auto t0 = Clock::now();
  const auto triples = load(cfg.triples_path, "triples_path", read_triples);
  auto pin = open_input(prompts_path);
  const auto prompts = read_prompts(pin);
  auto cin = open_input(completions_path);
  const auto completions = read_completions(cin);

  std::unordered_map<std::string, const CompletionRecord*> by_id;
  for (const auto& c : completions) by_id.emplace(c.id, &c);
  std::unordered_map<std::string, std::size_t> prompt_ids;
  for (std::size_t i = 0; i < prompts.size(); ++i)
    if (!prompt_ids.emplace(prompts[i].id, i).second) throw DataError("duplicate prompt id '" + prompts[i].id + "'");
  for (const auto& c : completions)
    if (!prompt_ids.count(c.id)) throw DataError("completion id '" + c.id + "' matches no exported prompt");

  std::unordered_map<std::string, const LabeledTriple*> triple_by_id;
  for (const auto& t : triples) triple_by_id.emplace(t.id, &t);

  std::optional<PolicyModel> rescorer_model;
  if (!cfg.checkpoint_path.empty()) rescorer_model = load_checkpoint(cfg.checkpoint_path);
  auto opts = refine_options(cfg);
  opts.provider_kind = ProviderKind::External;
  if (rescorer_model) opts.rescorer = make_internal_rescorer(*rescorer_model, JudgeCodec(rescorer_model->vocabulary_ptr()));

  RefineCounts counts;
  counts.triples = triples.size();
  std::vector<Judgment> judgments;
  std::vector<GradedPair> pairs;
  // Prompts are grouped per triple in export order; pairs are built per triple.
  std::map<std::string, std::vector<Judgment>> per_triple;
  std::vector<std::string> triple_order;
  for (const auto& p : prompts) {
    const auto hash = p.id.rfind('#');
    if (hash == std::string::npos) throw DataError("prompt id '" + p.id + "' has no '#seed' suffix");
    const auto triple_id = p.id.substr(0, hash);
    const auto tit = triple_by_id.find(triple_id);
    if (tit == triple_by_id.end()) throw DataError("prompt id '" + p.id + "' names an unknown triple");
    if (!per_triple.count(triple_id)) triple_order.push_back(triple_id);
    auto& bucket = per_triple[triple_id];
    const auto cit = by_id.find(p.id);
    if (cit == by_id.end()) {
      ++counts.dropped_samples;
      continue;
    }
    const auto prompt = build_judgment_prompt(*tit->second, p.sampling.seed);
    if (prompt.text != p.prompt) throw DataError("prompt '" + p.id + "' does not match its triple");
    const Generation gen{cit->second->text, cit->second->logprobs};
    auto outcome = judge_generation(*tit->second, prompt, gen, p.sampling.seed, cfg.scoring, opts);
    if (auto* j = std::get_if<Judgment>(&outcome)) {
      bucket.push_back(std::move(*j));
    } else {
      ++counts.failed_attempts;
      ++counts.dropped_samples;
    }
  }
  for (const auto& id : triple_order) {
    auto& bucket = per_triple[id];
    for (auto& p : build_pairs(bucket, cfg.grades)) pairs.push_back(std::move(p));
    for (auto& j : bucket) {
      ++counts.levels[j.level];
      judgments.push_back(std::move(j));
    }
  }
  counts.judgments = judgments.size();
  counts.pairs = pairs.size();
  return write_refine_outputs(out_dir, judgments, pairs, counts, seconds_since(t0));
}

std::vector<ConsistencyRow> cmd_consistency(const RunConfig& cfg, const fs::path& out_dir) {
  const auto world = gen_world(cfg.item_count, cfg.score_spread, derive_seed(cfg.seed, "world", 0), cfg.spacing);
  const GradeRule rule{cfg.grades, cfg.label_noise};
  const auto rows = consistency_report(world, cfg.n_grid, rule, derive_seed(cfg.seed, "prefs", 0), cfg.fit);
  auto out = open_output(out_dir / files::kConsistency);
  out << "n\tcentered_max_error\tkendall_tau\n";
  for (const auto& r : rows) out << r.n << '\t' << num(r.centered_max_error) << '\t' << num(r.kendall_tau) << '\n';
  return rows;
}

std::vector<AblationRow> cmd_ablation(const RunConfig& cfg, std::span<const Variant> variants,
                                      const fs::path& out_dir) {
  AblationData data;
  data.triples = load(cfg.triples_path, "triples_path", read_triples);
  data.sft = load(cfg.sft_path, "sft_path", read_sft_examples);
  data.heldout = load(cfg.heldout_path, "heldout_path", read_triples);
  if (auto hits = overlapping_questions(data.triples, data.heldout); !hits.empty()) throw OverlapError(std::move(hits));
  const auto rows = run_ablation(variants, data, cfg);
  auto out = open_output(out_dir / files::kAblation);
  write_ablation_table(out, rows);
  return rows;
}

}  // namespace gfriend
