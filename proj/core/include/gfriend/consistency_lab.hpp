#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gfriend/mdpo.hpp"

namespace gfriend {

enum class Spacing { Even, Uniform };

/// Ground-truth latent scores for a synthetic Bradley-Terry world. The first
/// score is pinned to 0 so only gaps carry information.
struct BTWorld {
  std::vector<double> true_scores;
  std::uint64_t seed = 0;

  std::size_t item_count() const noexcept { return true_scores.size(); }
  /// sigma(r*_winner - r*_loser).
  double win_probability(std::size_t winner, std::size_t loser) const;
  /// Median of |r*_i - r*_j| over unordered pairs i < j.
  double median_margin() const;
};

/// Scores in [0, score_spread]: evenly spaced, or uniform draws with the
/// first fixed at 0. Throws ArgumentError for item_count < 2 or spread <= 0.
BTWorld gen_world(std::size_t item_count, double score_spread, std::uint64_t seed, Spacing spacing = Spacing::Even);

struct GradedSample {
  std::size_t winner = 0;
  std::size_t loser = 0;
  int g_plus = 1;
  int g_minus = -1;
};

/// Grades are strong when the pair's true margin exceeds the world's median
/// margin, weak otherwise; `label_noise` flips that strength with the given
/// probability.
struct GradeRule {
  GradeConfig grades;
  double label_noise = 0.0;
};

/// n comparisons over uniformly drawn distinct item pairs, winners drawn from
/// the Bradley-Terry probability.
std::vector<GradedSample> sample_prefs(const BTWorld& world, std::size_t n, const GradeRule& rule,
                                       std::uint64_t seed);

struct FitOptions {
  std::size_t max_iterations = 5000;
  double step = 1.0;  // fraction of 1/L, L a bound on the loss curvature; must lie in (0, 2)
  double tolerance = 1e-8;  // stop when the max-norm of the gradient falls below
};

struct FitResult {
  std::vector<double> scores;  // scores[0] == 0
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Minimizes the mean of -w(g+, g-) * log sigma(r_winner - r_loser) by
/// full-batch gradient descent with r[0] pinned to 0. Throws ArgumentError
/// for a step outside (0, 2), and IdentifiabilityError when some item never
/// appears or the comparison graph is disconnected.
FitResult fit_weighted_mle(std::span<const GradedSample> samples, std::size_t item_count, const GradeConfig& cfg,
                           const FitOptions& opt = {});

/// Unweighted Bradley-Terry MLE by the minorize-maximize (Zermelo) fixed
/// point, independent of the gradient-descent path. Returned scores are
/// log-strengths shifted so scores[0] == 0.
std::vector<double> fit_unweighted_mle_mm(std::span<const GradedSample> samples, std::size_t item_count,
                                          std::size_t max_iterations = 100000, double tolerance = 1e-13);

/// Kendall tau-b between two score vectors.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// max_i |(est_i - est_0) - (truth_i - truth_0)|.
double centered_max_error(std::span<const double> estimate, std::span<const double> truth);

struct ConsistencyRow {
  std::size_t n = 0;
  double centered_max_error = 0.0;
  double kendall_tau = 0.0;
};

/// Fits the estimator on the first n samples of one seeded draw for every n
/// in `n_grid` (ascending). Throws ArgumentError if the grid is empty or not
/// ascending.
std::vector<ConsistencyRow> consistency_report(const BTWorld& world, std::span<const std::size_t> n_grid,
                                               const GradeRule& rule, std::uint64_t seed,
                                               const FitOptions& opt = {});

}  // namespace gfriend
