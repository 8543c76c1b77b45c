#pragma once

// Adaptive random-walk Metropolis over (lambda_so, d_es, d1, d2) + one
// delta_perp per emitter, with scale and covariance adaptation confined to a
// discarded burn-in. Everything is deterministic given (inputs, seed).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pl6/bayes/likelihood.hpp"

namespace pl6::bayes {

struct PriorBox {
  std::vector<std::string> names;
  Eigen::VectorXd lower, upper;

  bool contains(const Eigen::VectorXd& theta) const;
  void validate() const;  ///< finite bounds, lower < upper, matching sizes

  /// The standard box: lambda_so [0,20], d_es [0,5], d1 [0,1], d2 [0,2],
  /// then delta_perp [0,20] per emitter (all GHz).
  static PriorBox fine_structure_default(int n_emitters);
};

struct Chain {
  std::vector<std::string> parameter_names;
  Eigen::MatrixXd samples;        ///< post-burn-in draws, one per row
  Eigen::VectorXd log_posterior;  ///< matching rows
  std::uint64_t seed = 0;
  double acceptance_rate = 0.0;   ///< post-burn-in
};

struct McmcOptions {
  double burn_in_fraction = 0.2;  ///< adapted and discarded
  int prior_starts = 128;         ///< fallback multi-start candidates per chain
  /// Shared deterministic mode search before sampling: prior draws ranked by
  /// posterior, the best (one per 64 draws, at least 8) refined by
  /// Nelder-Mead, every chain initialized by a small jitter around the
  /// winner. 0 disables the stage (chains then start from their own best
  /// prior draw).
  int map_starts = 2048;
  int map_refine_evals = 20000;  ///< Nelder-Mead budget per refined start
  /// Extra deterministic start candidates ranked (and refined) alongside the
  /// prior draws of the mode search. Front ends that can exploit problem
  /// structure fill this to make the search reliable; fine-structure
  /// sampling seeds it with strain-profiled candidates when left empty.
  std::vector<Eigen::VectorXd> init_candidates;
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Deterministic posterior-mode search used to initialize chains: ranks
/// `map_starts` seeded prior draws by the sampling target and polishes the
/// best (one per 64 draws, at least 8) with box-projected Nelder-Mead. The
/// polish runs on up to `workers` threads; the result does not depend on the
/// worker count.
Eigen::VectorXd map_estimate(const LogDensity& log_likelihood, const PriorBox& priors,
                             std::uint64_t seed, const McmcOptions& options = {},
                             int workers = 1);

/// Generic sampler: target = log_likelihood(theta) + log prior (uniform box).
/// Chains use independent seeded streams derived from `seed` and run
/// concurrently when workers > 1 with identical output either way. Chains
/// start near the shared map_estimate (see McmcOptions), so the R-hat gate
/// certifies within-basin mixing. 1000 consecutive rejections throw
/// convergence_error with the proposal scale in the message.
std::vector<Chain> mcmc_sample(const LogDensity& log_likelihood, const PriorBox& priors,
                               int n_chains, int n_steps, std::uint64_t seed,
                               const McmcOptions& options = {}, int workers = 1);

/// Fine-structure convenience wrapper around log_likelihood().
std::vector<Chain> mcmc_sample(const std::vector<EmitterDataset>& datasets,
                               const PriorBox& priors, int n_chains, int n_steps,
                               std::uint64_t seed, const McmcOptions& options = {},
                               int workers = 1);

struct CredibleInterval {
  std::string name;
  double median = 0.0;
  double lower = 0.0, upper = 0.0;
  double level = 0.0;
};

/// Equal-tailed interval per parameter from one chain (or a merged chain);
/// needs >= 1000 draws. Quantiles are linear-interpolation (type 7).
std::vector<CredibleInterval> credible_interval(const Chain& chain, double level);

/// Merges chains row-wise (post-burn-in draws only).
Chain merge_chains(const std::vector<Chain>& chains);

/// Potential-scale-reduction factor per parameter over the sequences exactly
/// as passed: R = sqrt((W + B/n)/W). Identical chains give exactly 1.
/// Throws input_error on length mismatch or fewer than 2 chains.
Eigen::VectorXd rhat_diagnostic(const std::vector<Chain>& chains);

/// Split-R: halves every chain first, then applies rhat_diagnostic. This is
/// the statistic gating reported intervals (gate: < 1.05).
Eigen::VectorXd split_rhat(const std::vector<Chain>& chains);

struct PosteriorBand {
  std::vector<double> delta_perp;
  /// Rows follow the grid; columns follow LevelLabel order (A1..Ey).
  Eigen::MatrixXd q05, q50, q95;
};

/// Per-draw strain sweeps of the global parameters over the grid, reduced to
/// pointwise 5/50/95% envelopes per labeled branch. Uses at most max_draws
/// evenly thinned draws.
PosteriorBand posterior_predictive(const Chain& chain,
                                   const std::vector<double>& strain_grid,
                                   int max_draws = 200);

}  // namespace pl6::bayes
