#include "gfriend/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gfriend/errors.hpp"

namespace gfriend {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError("expected a number, got '" + v + "'");
  return d;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field integer_field(T RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& v) { c.*m = parse_integer<T>(v); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

// Fields reached through a nested member; `Access` returns a reference.
template <typename Access>
Field nested_double(Access a) {
  return {[a](RunConfig& c, const std::string& v) { a(c) = parse_double(v); },
          [a](const RunConfig& c) { return fmt_double(a(const_cast<RunConfig&>(c))); }};
}

template <typename T, typename Access>
Field nested_integer(Access a) {
  return {[a](RunConfig& c, const std::string& v) { a(c) = parse_integer<T>(v); },
          [a](const RunConfig& c) { return std::to_string(a(const_cast<RunConfig&>(c))); }};
}

Field string_field(std::string RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& v) { c.*m = v; }, [m](const RunConfig& c) { return c.*m; }};
}

void add_train_fields(std::map<std::string, Field>& f, const std::string& prefix, TrainConfig RunConfig::*tc) {
  auto tr = [tc](RunConfig& c) -> TrainConfig& { return c.*tc; };
  f[prefix + "epochs"] = nested_integer<std::size_t>([tr](RunConfig& c) -> std::size_t& { return tr(c).epochs; });
  f[prefix + "batch_size"] =
      nested_integer<std::size_t>([tr](RunConfig& c) -> std::size_t& { return tr(c).batch_size; });
  f[prefix + "peak_learning_rate"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).peak_learning_rate; });
  f[prefix + "min_learning_rate"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).min_learning_rate; });
  f[prefix + "warmup_fraction"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).warmup_fraction; });
  f[prefix + "schedule"] = {
      [tr](RunConfig& c, const std::string& v) {
        if (v == "cosine") tr(c).schedule = Schedule::Cosine;
        else if (v == "constant") tr(c).schedule = Schedule::Constant;
        else throw ConfigError("schedule must be cosine or constant, got '" + v + "'");
      },
      [tr](const RunConfig& c) {
        return std::string(tr(const_cast<RunConfig&>(c)).schedule == Schedule::Cosine ? "cosine" : "constant");
      }};
  f[prefix + "seed"] = nested_integer<std::uint64_t>([tr](RunConfig& c) -> std::uint64_t& { return tr(c).seed; });
  f[prefix + "checkpoint_every"] =
      nested_integer<std::size_t>([tr](RunConfig& c) -> std::size_t& { return tr(c).checkpoint_every; });
  f[prefix + "adam_beta1"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).adam_beta1; });
  f[prefix + "adam_beta2"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).adam_beta2; });
  f[prefix + "adam_epsilon"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).adam_epsilon; });
  f[prefix + "weight_decay"] = nested_double([tr](RunConfig& c) -> double& { return tr(c).weight_decay; });
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["seed"] = integer_field(&RunConfig::seed);
    f["context_window"] =
        nested_integer<std::size_t>([](RunConfig& c) -> std::size_t& { return c.architecture.context_window; });
    f["embedding_width"] =
        nested_integer<std::size_t>([](RunConfig& c) -> std::size_t& { return c.architecture.embedding_width; });
    f["hidden_width"] =
        nested_integer<std::size_t>([](RunConfig& c) -> std::size_t& { return c.architecture.hidden_width; });
    f["init_scale"] = nested_double([](RunConfig& c) -> double& { return c.init_scale; });

    f["temperature"] = nested_double([](RunConfig& c) -> double& { return c.sampling.temperature; });
    f["top_p"] = nested_double([](RunConfig& c) -> double& { return c.sampling.top_p; });
    f["top_k"] = nested_integer<std::uint32_t>([](RunConfig& c) -> std::uint32_t& { return c.sampling.top_k; });
    f["max_length"] =
        nested_integer<std::uint32_t>([](RunConfig& c) -> std::uint32_t& { return c.sampling.max_length; });
    f["greedy"] = {[](RunConfig& c, const std::string& v) { c.sampling.greedy = parse_bool(v); },
                   [](const RunConfig& c) { return std::string(c.sampling.greedy ? "true" : "false"); }};
    f["repetition_penalty"] = nested_double([](RunConfig& c) -> double& { return c.sampling.repetition_penalty; });

    f["tau"] = nested_double([](RunConfig& c) -> double& { return c.scoring.tau; });
    f["threshold_p"] = nested_double([](RunConfig& c) -> double& { return c.threshold_p; });
    f["k"] = integer_field(&RunConfig::k);
    f["parse_retries"] = integer_field(&RunConfig::parse_retries);
    f["jitter_low"] = nested_double([](RunConfig& c) -> double& { return c.jitter_low; });
    f["jitter_high"] = nested_double([](RunConfig& c) -> double& { return c.jitter_high; });

    f["strong_accept"] = nested_integer<int>([](RunConfig& c) -> int& { return c.grades.strong_accept; });
    f["weak_accept"] = nested_integer<int>([](RunConfig& c) -> int& { return c.grades.weak_accept; });
    f["weak_reject"] = nested_integer<int>([](RunConfig& c) -> int& { return c.grades.weak_reject; });
    f["strong_reject"] = nested_integer<int>([](RunConfig& c) -> int& { return c.grades.strong_reject; });
    f["alpha"] = nested_double([](RunConfig& c) -> double& { return c.grades.alpha; });
    f["beta"] = nested_double([](RunConfig& c) -> double& { return c.grades.beta; });

    add_train_fields(f, "sft_", &RunConfig::sft);
    add_train_fields(f, "mdpo_", &RunConfig::mdpo);

    f["item_count"] = integer_field(&RunConfig::item_count);
    f["score_spread"] = nested_double([](RunConfig& c) -> double& { return c.score_spread; });
    f["spacing"] = {[](RunConfig& c, const std::string& v) {
                      if (v == "even") c.spacing = Spacing::Even;
                      else if (v == "uniform") c.spacing = Spacing::Uniform;
                      else throw ConfigError("spacing must be even or uniform, got '" + v + "'");
                    },
                    [](const RunConfig& c) { return std::string(c.spacing == Spacing::Even ? "even" : "uniform"); }};
    f["n_grid"] = {[](RunConfig& c, const std::string& v) {
                     c.n_grid.clear();
                     std::stringstream ss(v);
                     std::string item;
                     while (std::getline(ss, item, ',')) c.n_grid.push_back(parse_integer<std::size_t>(trim(item)));
                   },
                   [](const RunConfig& c) {
                     std::string out;
                     for (auto n : c.n_grid) out += (out.empty() ? "" : ",") + std::to_string(n);
                     return out;
                   }};
    f["label_noise"] = nested_double([](RunConfig& c) -> double& { return c.label_noise; });
    f["fit_max_iterations"] =
        nested_integer<std::size_t>([](RunConfig& c) -> std::size_t& { return c.fit.max_iterations; });
    f["fit_step"] = nested_double([](RunConfig& c) -> double& { return c.fit.step; });
    f["fit_tolerance"] = nested_double([](RunConfig& c) -> double& { return c.fit.tolerance; });
    f["ablation_seeds"] = integer_field(&RunConfig::ablation_seeds);
    f["sft_size"] = integer_field(&RunConfig::sft_size);

    f["triples_path"] = string_field(&RunConfig::triples_path);
    f["sft_path"] = string_field(&RunConfig::sft_path);
    f["heldout_path"] = string_field(&RunConfig::heldout_path);
    f["judgments_path"] = string_field(&RunConfig::judgments_path);
    f["pairs_path"] = string_field(&RunConfig::pairs_path);
    f["checkpoint_path"] = string_field(&RunConfig::checkpoint_path);
    f["reference_path"] = string_field(&RunConfig::reference_path);
    f["output_dir"] = string_field(&RunConfig::output_dir);
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    sampling.validate();
    scoring.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  grades.validate();
  sft.validate();
  mdpo.validate();
  if (!(threshold_p > 0.0 && threshold_p < 1.0)) throw ConfigError("threshold_p must lie in (0, 1)");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(jitter_low > 0.0 && jitter_high >= jitter_low)) throw ConfigError("need 0 < jitter_low <= jitter_high");
  if (architecture.context_window == 0 || architecture.embedding_width == 0 || architecture.hidden_width == 0)
    throw ConfigError("architecture widths must be positive");
  if (item_count < 2) throw ConfigError("item_count must be >= 2");
  if (!(score_spread > 0.0)) throw ConfigError("score_spread must be positive");
  if (n_grid.empty()) throw ConfigError("n_grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i)
    if (n_grid[i] == 0 || (i > 0 && n_grid[i] <= n_grid[i - 1]))
      throw ConfigError("n_grid must be positive and strictly ascending");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ConfigError("label_noise must lie in [0, 1]");
  if (!(fit.step > 0.0 && fit.step < 2.0)) throw ConfigError("fit_step must lie in (0, 2)");
  if (fit.max_iterations == 0) throw ConfigError("fit_max_iterations must be positive");
  if (ablation_seeds < 1) throw ConfigError("ablation_seeds must be >= 1");
}

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  const auto& table = fields();
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(cfg) << '\n';
}

}  // namespace gfriend
