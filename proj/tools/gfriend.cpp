// gfriend: command-line front end for the judge-training pipeline.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error (including train/held-out overlap), 4 provider error,
// 5 training divergence.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfriend/commands.hpp"
#include "gfriend/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kProvider = 4, kDivergence = 5 };

}  // namespace

int main(int argc, char** argv) {
  using namespace gfriend;

  CLI::App app{"Generative judge training: CoT sampling, multi-level preferences, M-DPO"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--seed", seed_override, "root seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synthesize", "generate a toy preference corpus");
  std::string task = "majority";
  std::size_t size = 100, heldout = 0;
  synth->add_option("--task", task, "majority or order")->capture_default_str();
  synth->add_option("--size", size, "training triples")->capture_default_str();
  synth->add_option("--heldout", heldout, "held-out triples")->capture_default_str();

  auto* refine = app.add_subcommand("refine", "sample, score and pair judgments with the toy model");

  auto* train = app.add_subcommand("train", "run one training stage");
  std::string stage = "sft";
  train->add_option("--stage", stage, "sft or mdpo")->check(CLI::IsMember({"sft", "mdpo"}))->capture_default_str();

  auto* eval = app.add_subcommand("eval", "greedy judge accuracy on the held-out triples");

  auto* provider = app.add_subcommand("provider", "offline exchange with an external judge");
  provider->require_subcommand(1);
  provider->fallthrough();
  auto* pexport = provider->add_subcommand("export", "write judging prompts");
  auto* ingest = provider->add_subcommand("ingest", "read completions into judgments and pairs");
  std::string prompts_path, completions_path;
  ingest->add_option("--prompts", prompts_path, "exported prompts file")->required();
  ingest->add_option("--completions", completions_path, "completions file")->required();

  auto* consistency = app.add_subcommand("consistency", "weighted Bradley-Terry consistency report");

  auto* ablation = app.add_subcommand("ablation", "train and compare pipeline variants");
  std::vector<std::string> variant_names = {"sft_only", "no_mdpo", "no_cots", "full"};
  ablation->add_option("--variants", variant_names, "subset of sft_only no_mdpo no_cots full")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    cfg.validate();

    if (*synth) {
      const auto c = cmd_synthesize(synth_task_from_string(task), size, heldout, cfg.seed, out_dir);
      std::printf("triples=%zu sft=%zu heldout=%zu\n", c.triples, c.sft, c.heldout);
    } else if (*refine) {
      const auto c = cmd_refine(cfg, out_dir);
      std::printf("judgments=%zu pairs=%zu failed_attempts=%zu\n", c.judgments, c.pairs, c.failed_attempts);
    } else if (*train) {
      const auto r = cmd_train(cfg, stage == "sft" ? Stage::Sft : Stage::Mdpo, out_dir);
      std::printf("steps=%zu initial_loss=%.6f final_loss=%.6f\n", r.loss_series.size(), r.initial_loss,
                  r.final_loss);
      if (r.heldout_accuracy) std::printf("heldout_accuracy=%.4f\n", *r.heldout_accuracy);
    } else if (*eval) {
      const auto r = cmd_eval(cfg, out_dir);
      std::printf("accuracy=%.4f correct=%zu total=%zu parse_failures=%zu\n", r.accuracy(), r.correct, r.total,
                  r.parse_failures);
    } else if (*pexport) {
      std::printf("prompts=%zu\n", cmd_provider_export(cfg, out_dir));
    } else if (*ingest) {
      const auto c = cmd_provider_ingest(cfg, prompts_path, completions_path, out_dir);
      std::printf("judgments=%zu pairs=%zu failed_attempts=%zu\n", c.judgments, c.pairs, c.failed_attempts);
    } else if (*consistency) {
      for (const auto& r : cmd_consistency(cfg, out_dir))
        std::printf("n=%zu centered_max_error=%.6f kendall_tau=%.6f\n", r.n, r.centered_max_error, r.kendall_tau);
    } else if (*ablation) {
      std::vector<Variant> variants;
      for (const auto& v : variant_names) variants.push_back(variant_from_string(v));
      write_ablation_table(std::cout, cmd_ablation(cfg, variants, out_dir));
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const VocabularyError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kProvider;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
