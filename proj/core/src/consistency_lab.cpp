#include "gfriend/consistency_lab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "gfriend/errors.hpp"
#include "gfriend/seed.hpp"

namespace gfriend {

double BTWorld::win_probability(std::size_t winner, std::size_t loser) const {
  return sigmoid(true_scores.at(winner) - true_scores.at(loser));
}

double BTWorld::median_margin() const {
  std::vector<double> m;
  for (std::size_t i = 0; i < true_scores.size(); ++i)
    for (std::size_t j = i + 1; j < true_scores.size(); ++j) m.push_back(std::abs(true_scores[i] - true_scores[j]));
  if (m.empty()) return 0.0;
  std::sort(m.begin(), m.end());
  const std::size_t h = m.size() / 2;
  return m.size() % 2 ? m[h] : 0.5 * (m[h - 1] + m[h]);
}

BTWorld gen_world(std::size_t item_count, double score_spread, std::uint64_t seed, Spacing spacing) {
  if (item_count < 2) throw ArgumentError("a world needs at least two items");
  if (!(score_spread > 0.0) || !std::isfinite(score_spread)) throw ArgumentError("score_spread must be positive");
  BTWorld w;
  w.seed = seed;
  w.true_scores.resize(item_count, 0.0);
  if (spacing == Spacing::Even) {
    for (std::size_t i = 0; i < item_count; ++i)
      w.true_scores[i] = score_spread * static_cast<double>(i) / static_cast<double>(item_count - 1);
  } else {
    std::mt19937_64 rng(derive_seed(seed, "world", 0));
    for (std::size_t i = 1; i < item_count; ++i) w.true_scores[i] = score_spread * unit_interval(rng());
  }
  return w;
}

std::vector<GradedSample> sample_prefs(const BTWorld& world, std::size_t n, const GradeRule& rule,
                                       std::uint64_t seed) {
  if (n == 0) throw ArgumentError("n must be >= 1");
  const std::size_t m = world.item_count();
  if (m < 2) throw ArgumentError("a world needs at least two items");
  const double median = world.median_margin();
  std::mt19937_64 rng(derive_seed(seed, "prefs", 0));
  std::vector<GradedSample> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto i = std::min(static_cast<std::size_t>(unit_interval(rng()) * static_cast<double>(m)), m - 1);
    auto j = std::min(static_cast<std::size_t>(unit_interval(rng()) * static_cast<double>(m - 1)), m - 2);
    if (j >= i) ++j;
    const bool j_wins = unit_interval(rng()) < world.win_probability(j, i);
    GradedSample g;
    g.winner = j_wins ? j : i;
    g.loser = j_wins ? i : j;
    bool strong = std::abs(world.true_scores[i] - world.true_scores[j]) > median;
    if (rule.label_noise > 0.0 && unit_interval(rng()) < rule.label_noise) strong = !strong;
    g.g_plus = strong ? rule.grades.strong_accept : rule.grades.weak_accept;
    g.g_minus = strong ? rule.grades.strong_reject : rule.grades.weak_reject;
    out.push_back(g);
  }
  return out;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

void check_identifiable(std::span<const GradedSample> samples, std::size_t item_count) {
  std::vector<std::size_t> parent(item_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<bool> seen(item_count, false);
  for (const auto& s : samples) {
    if (s.winner >= item_count || s.loser >= item_count || s.winner == s.loser)
      throw ArgumentError("sample has an invalid item index");
    seen[s.winner] = seen[s.loser] = true;
    parent[find_root(parent, s.winner)] = find_root(parent, s.loser);
  }
  for (std::size_t i = 0; i < item_count; ++i) {
    if (!seen[i]) throw IdentifiabilityError("item " + std::to_string(i) + " appears in no comparison");
    if (find_root(parent, i) != find_root(parent, 0))
      throw IdentifiabilityError("comparison graph is disconnected (item " + std::to_string(i) + ")");
  }
}

struct Aggregate {
  std::size_t winner, loser;
  double weight;  // summed w over identical comparisons
};

// Collapse identical (winner, loser, grades) comparisons; the objective is a
// sum of identical terms for each.
std::vector<Aggregate> aggregate(std::span<const GradedSample> samples, double alpha) {
  std::map<std::tuple<std::size_t, std::size_t, int, int>, std::size_t> counts;
  for (const auto& s : samples) ++counts[{s.winner, s.loser, s.g_plus, s.g_minus}];
  std::vector<Aggregate> out;
  out.reserve(counts.size());
  for (const auto& [key, c] : counts) {
    const auto& [w, l, gp, gm] = key;
    out.push_back({w, l, static_cast<double>(c) * weight(gp, gm, alpha)});
  }
  return out;
}

}  // namespace

FitResult fit_weighted_mle(std::span<const GradedSample> samples, std::size_t item_count, const GradeConfig& cfg,
                           const FitOptions& opt) {
  if (item_count < 2) throw ArgumentError("need at least two items");
  check_identifiable(samples, item_count);
  const auto terms = aggregate(samples, cfg.alpha);
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  if (!(opt.step > 0.0 && opt.step < 2.0)) throw ArgumentError("fit step must lie in (0, 2)");
  // Gershgorin bound on the Hessian, whose entries are w * sigma' / n with sigma' <= 1/4.
  std::vector<double> row_sum(item_count, 0.0);
  for (const auto& t : terms) {
    row_sum[t.winner] += 0.5 * t.weight * inv_n;
    row_sum[t.loser] += 0.5 * t.weight * inv_n;
  }
  const double step = opt.step / *std::max_element(row_sum.begin(), row_sum.end());

  FitResult r;
  r.scores.assign(item_count, 0.0);
  std::vector<double> grad(item_count);
  for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& t : terms) {
      const double g = t.weight * sigmoid(r.scores[t.loser] - r.scores[t.winner]) * inv_n;
      grad[t.winner] -= g;
      grad[t.loser] += g;
    }
    grad[0] = 0.0;
    r.gradient_norm = 0.0;
    for (double g : grad) r.gradient_norm = std::max(r.gradient_norm, std::abs(g));
    if (r.gradient_norm < opt.tolerance) {
      r.converged = true;
      break;
    }
    for (std::size_t i = 1; i < item_count; ++i) r.scores[i] -= step * grad[i];
  }
  return r;
}

std::vector<double> fit_unweighted_mle_mm(std::span<const GradedSample> samples, std::size_t item_count,
                                          std::size_t max_iterations, double tolerance) {
  check_identifiable(samples, item_count);
  std::vector<double> wins(item_count, 0.0);
  std::vector<std::vector<double>> games(item_count, std::vector<double>(item_count, 0.0));
  for (const auto& s : samples) {
    wins[s.winner] += 1.0;
    games[s.winner][s.loser] += 1.0;
    games[s.loser][s.winner] += 1.0;
  }
  for (std::size_t i = 0; i < item_count; ++i)
    if (wins[i] == 0.0) throw IdentifiabilityError("item " + std::to_string(i) + " never wins; MLE does not exist");

  std::vector<double> strength(item_count, 1.0), next(item_count);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < item_count; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < item_count; ++j)
        if (j != i && games[i][j] > 0.0) denom += games[i][j] / (strength[i] + strength[j]);
      next[i] = wins[i] / denom;
    }
    const double norm = next[0];
    double change = 0.0;
    for (std::size_t i = 0; i < item_count; ++i) {
      next[i] /= norm;
      change = std::max(change, std::abs(std::log(next[i]) - std::log(strength[i])));
    }
    strength.swap(next);
    if (change < tolerance) break;
  }
  std::vector<double> scores(item_count);
  for (std::size_t i = 0; i < item_count; ++i) scores[i] = std::log(strength[i]) - std::log(strength[0]);
  return scores;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("kendall_tau: size mismatch");
  double concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) ties_a += 1;
      else if (db == 0.0) ties_b += 1;
      else if ((da > 0) == (db > 0)) concordant += 1;
      else discordant += 1;
    }
  const double denom = std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
  return denom == 0.0 ? 0.0 : (concordant - discordant) / denom;
}

double centered_max_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size() || estimate.empty()) throw ArgumentError("centered_max_error: size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i)
    e = std::max(e, std::abs((estimate[i] - estimate[0]) - (truth[i] - truth[0])));
  return e;
}

std::vector<ConsistencyRow> consistency_report(const BTWorld& world, std::span<const std::size_t> n_grid,
                                               const GradeRule& rule, std::uint64_t seed, const FitOptions& opt) {
  if (n_grid.empty()) throw ArgumentError("n_grid is empty");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
    throw ArgumentError("n_grid must be strictly ascending");
  const auto samples = sample_prefs(world, n_grid.back(), rule, seed);
  std::vector<ConsistencyRow> rows;
  for (auto n : n_grid) {
    const auto fit = fit_weighted_mle(std::span(samples).first(n), world.item_count(), rule.grades, opt);
    rows.push_back({n, centered_max_error(fit.scores, world.true_scores), kendall_tau(fit.scores, world.true_scores)});
  }
  return rows;
}

}  // namespace gfriend
