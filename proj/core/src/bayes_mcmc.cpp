#include "pl6/bayes/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include <Eigen/Cholesky>

#include "pl6/errors.hpp"
#include "pl6/rng.hpp"

namespace pl6::bayes {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::uint64_t scramble(std::uint64_t seed, std::uint64_t stream) {
  // splitmix-style mix so per-chain streams are decorrelated but reproducible
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct Target {
  const LogDensity* like;
  const PriorBox* priors;
  double log_prior_const;

  double operator()(const Eigen::VectorXd& theta) const {
    if (!priors->contains(theta)) return -inf;
    const double ll = (*like)(theta);
    return std::isfinite(ll) ? ll + log_prior_const : -inf;
  }
};

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& v, const PriorBox& priors) {
  return v.cwiseMax(priors.lower).cwiseMin(priors.upper);
}

/// Standard Nelder-Mead on -target with candidates projected into the box.
/// Refines x in place; returns the achieved target value.
double nelder_mead_refine(const Target& target, const PriorBox& priors,
                          Eigen::VectorXd& x, int eval_budget) {
  const Eigen::Index d = priors.lower.size();
  const Eigen::VectorXd width = priors.upper - priors.lower;
  int evals = 0;
  const auto f = [&](const Eigen::VectorXd& p) {
    ++evals;
    const double lp = target(p);
    return lp == -inf ? inf : -lp;
  };

  const auto n = static_cast<std::size_t>(d) + 1;
  std::vector<Eigen::VectorXd> pts(n, x);
  std::vector<double> fv(n);
  for (std::size_t k = 1; k < n; ++k) {
    const auto j = static_cast<Eigen::Index>(k - 1);
    pts[k](j) += 0.05 * width(j);
    pts[k] = clamp_to_box(pts[k], priors);
    if ((pts[k] - x).norm() == 0.0) pts[k](j) -= 0.05 * width(j);
  }
  for (std::size_t k = 0; k < n; ++k) fv[k] = f(pts[k]);

  std::vector<std::size_t> order(n);
  while (evals < eval_budget) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[n - 2];
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] < 1e-12 * (std::abs(fv[best]) + 1e-12))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < n; ++k)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd reflected =
        clamp_to_box(centroid + (centroid - pts[worst]), priors);
    const double fr = f(reflected);
    if (fr < fv[best]) {
      const Eigen::VectorXd expanded =
          clamp_to_box(centroid + 2.0 * (reflected - centroid), priors);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        fv[worst] = fe;
      } else {
        pts[worst] = reflected;
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      pts[worst] = reflected;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const Eigen::VectorXd contracted = clamp_to_box(
          outside ? centroid + 0.5 * (reflected - centroid)
                  : centroid + 0.5 * (pts[worst] - centroid),
          priors);
      const double fc = f(contracted);
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = contracted;
        fv[worst] = fc;
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          if (k == best) continue;
          pts[k] = clamp_to_box(pts[best] + 0.5 * (pts[k] - pts[best]), priors);
          fv[k] = f(pts[k]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (fv[k] < fv[best]) best = k;
  x = pts[best];
  return fv[best] == inf ? -inf : -fv[best];
}

Eigen::VectorXd map_search(const Target& target, const PriorBox& priors,
                           std::uint64_t seed, const McmcOptions& options,
                           int workers) {
  const Eigen::Index d = priors.lower.size();
  const Eigen::VectorXd width = priors.upper - priors.lower;
  Rng rng(scramble(seed, 0x4D4150ULL));  // dedicated stream for the mode search

  const int starts = std::max(options.map_starts, 1);
  std::vector<std::pair<double, Eigen::VectorXd>> ranked;
  ranked.reserve(static_cast<std::size_t>(starts) + options.init_candidates.size());
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd cand(d);
    for (Eigen::Index j = 0; j < d; ++j)
      cand(j) = priors.lower(j) + width(j) * rng.uniform();
    ranked.emplace_back(target(cand), std::move(cand));
  }
  for (const auto& given : options.init_candidates) {
    if (given.size() != d)
      throw input_error("init candidate dimension does not match the prior box");
    Eigen::VectorXd cand = clamp_to_box(given, priors);
    ranked.emplace_back(target(cand), std::move(cand));
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  // One refinement per 64 draws, at least 8: with only a handful the
  // top-ranked draws can all sit in the catchment of the same non-global
  // optimum and every chain inherits that mode. Each refinement is
  // deterministic and independent, so the pool cannot change the result.
  const std::size_t refine =
      std::min(std::min<std::size_t>(64, ranked.size()),
               std::max<std::size_t>(8, ranked.size() / 64));
  std::vector<Eigen::VectorXd> xs(refine);
  std::vector<double> lps(refine, -inf);
  std::atomic<std::size_t> next_k{0};
  std::exception_ptr refine_error;
  std::mutex refine_mutex;
  auto refine_work = [&] {
    for (;;) {
      const std::size_t k = next_k.fetch_add(1);
      if (k >= refine) return;
      try {
        xs[k] = ranked[k].second;
        lps[k] = nelder_mead_refine(target, priors, xs[k], options.map_refine_evals);
      } catch (...) {
        std::lock_guard<std::mutex> lock(refine_mutex);
        if (!refine_error) refine_error = std::current_exception();
        return;
      }
    }
  };
  const int pool_size = std::max(1, std::min(workers, static_cast<int>(refine)));
  if (pool_size == 1) {
    refine_work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int t = 0; t < pool_size; ++t) pool.emplace_back(refine_work);
    for (auto& th : pool) th.join();
  }
  if (refine_error) std::rethrow_exception(refine_error);

  Eigen::VectorXd best = ranked.front().second;
  double best_lp = ranked.front().first;
  for (std::size_t k = 0; k < refine; ++k) {
    if (lps[k] > best_lp) {
      best_lp = lps[k];
      best = xs[k];
    }
  }
  return best;
}

/// Proposal Cholesky factor from the finite-difference curvature of the
/// target at the mode: chol(2.38^2/d * (-H)^{-1}). Empty when the curvature
/// is not usable (stencil clipped by the box, indefinite Hessian, ...); the
/// caller then falls back to the diagonal default.
Eigen::MatrixXd curvature_proposal(const Target& target, const PriorBox& priors,
                                   const Eigen::VectorXd& x0) {
  const Eigen::Index d = x0.size();
  const Eigen::VectorXd width = priors.upper - priors.lower;
  Eigen::VectorXd h(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    h(j) = 1e-4 * width(j);
    const double room = std::min(priors.upper(j) - x0(j), x0(j) - priors.lower(j));
    if (room < h(j)) h(j) = 0.5 * room;
    if (!(h(j) > 0.0)) return {};
  }
  const double f0 = target(x0);
  if (!std::isfinite(f0)) return {};
  const auto shifted = [&](Eigen::Index j, double sj, Eigen::Index k, double sk) {
    Eigen::VectorXd x = x0;
    x(j) += sj * h(j);
    if (k >= 0) x(k) += sk * h(k);
    return target(x);
  };
  Eigen::MatrixXd hess(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double fp = shifted(j, 1.0, -1, 0.0), fm = shifted(j, -1.0, -1, 0.0);
    hess(j, j) = (fp - 2.0 * f0 + fm) / (h(j) * h(j));
    for (Eigen::Index k = 0; k < j; ++k) {
      const double fpp = shifted(j, 1.0, k, 1.0), fpm = shifted(j, 1.0, k, -1.0);
      const double fmp = shifted(j, -1.0, k, 1.0), fmm = shifted(j, -1.0, k, -1.0);
      hess(j, k) = hess(k, j) = (fpp - fpm - fmp + fmm) / (4.0 * h(j) * h(k));
    }
  }
  if (!hess.allFinite()) return {};
  const Eigen::LLT<Eigen::MatrixXd> info_llt(Eigen::MatrixXd(-hess));
  if (info_llt.info() != Eigen::Success) return {};
  Eigen::MatrixXd cov =
      info_llt.solve(Eigen::MatrixXd::Identity(d, d)) * (5.6644 / static_cast<double>(d));
  const Eigen::LLT<Eigen::MatrixXd> cov_llt(cov);
  if (cov_llt.info() != Eigen::Success) return {};
  return cov_llt.matrixL();
}

Chain run_chain(const Target& target, const PriorBox& priors, int n_steps,
                std::uint64_t chain_seed, const McmcOptions& options,
                const Eigen::VectorXd* shared_init,
                const Eigen::MatrixXd* shared_chol) {
  const Eigen::Index d = priors.lower.size();
  Rng rng(chain_seed);

  const Eigen::VectorXd width = priors.upper - priors.lower;

  Eigen::VectorXd theta(d);
  double lp_cur = -inf;
  if (shared_init != nullptr) {
    // per-chain jitter around the shared mode estimate, proposal-sized when
    // the curvature is available
    for (int attempt = 0; attempt < 100 && lp_cur == -inf; ++attempt) {
      Eigen::VectorXd z(d);
      for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
      Eigen::VectorXd cand =
          *shared_init + (shared_chol ? Eigen::VectorXd(*shared_chol * z)
                                      : Eigen::VectorXd(1e-3 * width.array() * z.array()));
      cand = clamp_to_box(cand, priors);
      const double lp = target(cand);
      if (lp > -inf) {
        theta = cand;
        lp_cur = lp;
      }
    }
    if (lp_cur == -inf) {
      theta = *shared_init;
      lp_cur = target(theta);
    }
  } else {
    // multi-start: best of a batch of prior draws
    for (int s = 0; s < std::max(options.prior_starts, 1); ++s) {
      Eigen::VectorXd cand(d);
      for (Eigen::Index j = 0; j < d; ++j)
        cand(j) = priors.lower(j) + width(j) * rng.uniform();
      const double lp = target(cand);
      if (s == 0 || lp > lp_cur) {
        theta = cand;
        lp_cur = lp;
      }
    }
  }

  const int burn_in = static_cast<int>(std::floor(options.burn_in_fraction * n_steps));
  const int kept = n_steps - burn_in;

  // adaptive proposal state (only touched during burn-in)
  double log_scale = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  long moments_n = 0;
  // initial proposal: mode curvature when available, else a diagonal guess
  // (the Robbins-Monro scale drift and the covariance adaptation take over)
  Eigen::MatrixXd chol;
  if (shared_chol != nullptr)
    chol = *shared_chol;
  else
    chol = ((shared_init ? 0.01 : 0.05) * width).asDiagonal();
  const Eigen::MatrixXd chol0 = chol;

  Chain chain;
  chain.parameter_names = priors.names;
  chain.seed = chain_seed;
  chain.samples.resize(kept, d);
  chain.log_posterior.resize(kept);

  long accepted_kept = 0;
  int consecutive_rejects = 0;

  for (int t = 0; t < n_steps; ++t) {
    Eigen::VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
    const Eigen::VectorXd proposal = theta + std::exp(log_scale) * (chol * z);

    const double lp_new = target(proposal);
    double alpha = 0.0;
    if (lp_new > -inf)
      alpha = (lp_cur == -inf) ? 1.0 : std::min(1.0, std::exp(lp_new - lp_cur));
    const bool accept = lp_new > -inf && (lp_cur == -inf || rng.uniform() < alpha);

    if (accept) {
      theta = proposal;
      lp_cur = lp_new;
      consecutive_rejects = 0;
    } else if (++consecutive_rejects >= 1000) {
      throw convergence_error(
          "sampler stalled: 1000 consecutive rejections at proposal scale " +
          std::to_string(std::exp(log_scale)));
    }

    if (t < burn_in) {
      // damped Robbins-Monro drift of the global scale toward 23.4% acceptance
      log_scale += (alpha - 0.234) / std::pow(t + 1.0, 0.6);

      ++moments_n;
      const Eigen::VectorXd delta = theta - mean;
      mean += delta / static_cast<double>(moments_n);
      m2 += delta * (theta - mean).transpose();

      if (moments_n >= std::max<long>(20, 2 * d)) {
        Eigen::MatrixXd cov = m2 / static_cast<double>(moments_n - 1);
        cov *= 5.6644 / static_cast<double>(d);  // 2.38^2/d, Haario et al. scaling
        for (Eigen::Index j = 0; j < d; ++j) cov(j, j) += 1e-12 * width(j) * width(j);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        chol = llt.info() == Eigen::Success ? Eigen::MatrixXd(llt.matrixL()) : chol0;
      }
    } else {
      const int row = t - burn_in;
      chain.samples.row(row) = theta.transpose();
      chain.log_posterior(row) = lp_cur;
      if (accept) ++accepted_kept;
    }
  }

  chain.acceptance_rate = kept > 0 ? static_cast<double>(accepted_kept) / kept : 0.0;
  return chain;
}

/// Structured start candidates for the fine-structure posterior: draw the 4
/// global parameters from a dedicated seeded stream and profile each
/// emitter's strain with a coarse 1-D likelihood scan. Random multi-start in
/// the full space has to hit an 11-or-more-dimensional basin by luck, which
/// fails often enough that whole runs land on a non-global optimum; with the
/// strains profiled out, the search effectively covers the 4 global
/// dimensions only. Deterministic given (datasets, priors, seed).
std::vector<Eigen::VectorXd> profiled_start_candidates(
    const std::vector<EmitterDataset>& datasets, const PriorBox& priors,
    std::uint64_t seed, int workers) {
  constexpr int n_cand = 256;
  constexpr int scan_steps = 200;
  const Eigen::Index d = priors.lower.size();
  const auto n_emitters = static_cast<Eigen::Index>(datasets.size());

  Rng rng(scramble(seed, 0x50524F46ULL));  // dedicated stream for the profiling
  std::vector<Eigen::VectorXd> cands(n_cand, Eigen::VectorXd::Zero(d));
  for (int c = 0; c < n_cand; ++c)
    for (Eigen::Index j = 0; j < 4; ++j)
      cands[static_cast<std::size_t>(c)](j) =
          priors.lower(j) + (priors.upper(j) - priors.lower(j)) * rng.uniform();

  std::vector<std::vector<EmitterDataset>> singles;
  singles.reserve(datasets.size());
  for (const auto& ds : datasets) singles.push_back({ds});

  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_cand) return;
      auto& cand = cands[static_cast<std::size_t>(c)];
      FineStructureParams p;
      p.lambda_so = cand(0);
      p.d_es = cand(1);
      p.d1 = cand(2);
      p.d2 = cand(3);
      for (Eigen::Index k = 0; k < n_emitters; ++k) {
        const double lo = priors.lower(4 + k), hi = priors.upper(4 + k);
        double best_s = lo, best_ll = -inf;
        for (int q = 0; q <= scan_steps; ++q) {
          const double s = lo + (hi - lo) * q / scan_steps;
          const double ll =
              log_likelihood(p, {s}, singles[static_cast<std::size_t>(k)]);
          if (ll > best_ll) {
            best_ll = ll;
            best_s = s;
          }
        }
        cand(4 + k) = best_s;
      }
    }
  };
  const int pool_size = std::max(1, std::min(workers, n_cand));
  if (pool_size == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int t = 0; t < pool_size; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return cands;
}

}  // namespace

bool PriorBox::contains(const Eigen::VectorXd& theta) const {
  if (theta.size() != lower.size()) return false;
  return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

void PriorBox::validate() const {
  const auto n = static_cast<std::size_t>(lower.size());
  if (names.size() != n || static_cast<std::size_t>(upper.size()) != n || n == 0)
    throw input_error("prior box needs matching, nonempty names/lower/upper");
  for (std::size_t k = 0; k < n; ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    if (!std::isfinite(lower(j)) || !std::isfinite(upper(j)) || !(lower(j) < upper(j)))
      throw input_error("prior bounds for '" + names[k] + "' must be finite with lower < upper");
  }
}

PriorBox PriorBox::fine_structure_default(int n_emitters) {
  if (n_emitters < 1) throw input_error("need at least one emitter");
  PriorBox box;
  box.names = {"lambda_so", "d_es", "d1", "d2"};
  const int n = 4 + n_emitters;
  box.lower.resize(n);
  box.upper.resize(n);
  box.lower << Eigen::VectorXd::Zero(n);
  box.upper(0) = 20.0;
  box.upper(1) = 5.0;
  box.upper(2) = 1.0;
  box.upper(3) = 2.0;
  for (int k = 0; k < n_emitters; ++k) {
    box.names.push_back("delta_perp_" + std::to_string(k + 1));
    box.upper(4 + k) = 20.0;
  }
  return box;
}

Eigen::VectorXd map_estimate(const LogDensity& log_likelihood, const PriorBox& priors,
                             std::uint64_t seed, const McmcOptions& options,
                             int workers) {
  priors.validate();
  double log_prior_const = 0.0;
  for (Eigen::Index j = 0; j < priors.lower.size(); ++j)
    log_prior_const -= std::log(priors.upper(j) - priors.lower(j));
  const Target target{&log_likelihood, &priors, log_prior_const};
  return map_search(target, priors, seed, options, workers);
}

std::vector<Chain> mcmc_sample(const LogDensity& log_likelihood, const PriorBox& priors,
                               int n_chains, int n_steps, std::uint64_t seed,
                               const McmcOptions& options, int workers) {
  priors.validate();
  if (n_chains < 1) throw input_error("need at least one chain");
  if (n_steps < 10) throw input_error("need at least 10 steps");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction <= 0.9))
    throw input_error("burn_in_fraction must lie in [0, 0.9]");

  double log_prior_const = 0.0;
  for (Eigen::Index j = 0; j < priors.lower.size(); ++j)
    log_prior_const -= std::log(priors.upper(j) - priors.lower(j));
  const Target target{&log_likelihood, &priors, log_prior_const};

  // shared deterministic mode search (worker pool only affects wall time)
  std::optional<Eigen::VectorXd> shared_init;
  std::optional<Eigen::MatrixXd> shared_chol;
  if (options.map_starts > 0) {
    shared_init = map_search(target, priors, seed, options, workers);
    Eigen::MatrixXd c = curvature_proposal(target, priors, *shared_init);
    if (c.size() > 0) shared_chol = std::move(c);
  }

  std::vector<Chain> chains(static_cast<std::size_t>(n_chains));
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chains) return;
      try {
        chains[static_cast<std::size_t>(c)] =
            run_chain(target, priors, n_steps, scramble(seed, static_cast<std::uint64_t>(c)),
                      options, shared_init ? &*shared_init : nullptr,
                      shared_chol ? &*shared_chol : nullptr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min(workers, n_chains));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return chains;
}

std::vector<Chain> mcmc_sample(const std::vector<EmitterDataset>& datasets,
                               const PriorBox& priors, int n_chains, int n_steps,
                               std::uint64_t seed, const McmcOptions& options,
                               int workers) {
  if (datasets.empty()) throw input_error("need at least one emitter dataset");
  for (const auto& ds : datasets) ds.validate();
  if (priors.names.size() != 4 + datasets.size())
    throw input_error("prior box must hold 4 globals plus one strain per emitter");

  LogDensity like = [&datasets](const Eigen::VectorXd& theta) {
    FineStructureParams params;
    params.lambda_so = theta(0);
    params.d_es = theta(1);
    params.d1 = theta(2);
    params.d2 = theta(3);
    std::vector<double> strains(datasets.size());
    for (std::size_t k = 0; k < strains.size(); ++k)
      strains[k] = theta(4 + static_cast<Eigen::Index>(k));
    return log_likelihood(params, strains, datasets);
  };
  McmcOptions opts = options;
  if (opts.map_starts > 0 && opts.init_candidates.empty())
    opts.init_candidates = profiled_start_candidates(datasets, priors, seed, workers);
  return mcmc_sample(like, priors, n_chains, n_steps, seed, opts, workers);
}

std::vector<CredibleInterval> credible_interval(const Chain& chain, double level) {
  if (!(level > 0.0 && level < 1.0)) throw input_error("level must lie in (0, 1)");
  if (chain.samples.rows() < 1000)
    throw input_error("need at least 1000 draws for a credible interval (have " +
                      std::to_string(chain.samples.rows()) + ")");
  std::vector<CredibleInterval> out;
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
    std::vector<double> col(static_cast<std::size_t>(chain.samples.rows()));
    for (Eigen::Index i = 0; i < chain.samples.rows(); ++i)
      col[static_cast<std::size_t>(i)] = chain.samples(i, j);
    std::sort(col.begin(), col.end());
    CredibleInterval ci;
    ci.name = chain.parameter_names[static_cast<std::size_t>(j)];
    ci.median = quantile_sorted(col, 0.5);
    ci.lower = quantile_sorted(col, tail);
    ci.upper = quantile_sorted(col, 1.0 - tail);
    ci.level = level;
    out.push_back(std::move(ci));
  }
  return out;
}

Chain merge_chains(const std::vector<Chain>& chains) {
  if (chains.empty()) throw input_error("nothing to merge");
  Eigen::Index rows = 0;
  for (const auto& c : chains) {
    if (c.parameter_names != chains.front().parameter_names)
      throw input_error("cannot merge chains over different parameters");
    rows += c.samples.rows();
  }
  Chain merged;
  merged.parameter_names = chains.front().parameter_names;
  merged.seed = chains.front().seed;
  merged.samples.resize(rows, chains.front().samples.cols());
  merged.log_posterior.resize(rows);
  Eigen::Index at = 0;
  double weighted_accept = 0.0;
  for (const auto& c : chains) {
    merged.samples.middleRows(at, c.samples.rows()) = c.samples;
    merged.log_posterior.segment(at, c.log_posterior.size()) = c.log_posterior;
    weighted_accept += c.acceptance_rate * static_cast<double>(c.samples.rows());
    at += c.samples.rows();
  }
  merged.acceptance_rate = rows > 0 ? weighted_accept / static_cast<double>(rows) : 0.0;
  return merged;
}

Eigen::VectorXd rhat_diagnostic(const std::vector<Chain>& chains) {
  if (chains.size() < 2) throw input_error("potential scale reduction needs >= 2 chains");
  const Eigen::Index n = chains.front().samples.rows();
  const Eigen::Index d = chains.front().samples.cols();
  if (n < 2) throw input_error("chains must hold at least 2 draws");
  for (const auto& c : chains)
    if (c.samples.rows() != n || c.samples.cols() != d)
      throw input_error("chains must have identical shapes");

  const auto m = static_cast<double>(chains.size());
  Eigen::VectorXd rhat(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double grand = 0.0, w = 0.0;
    std::vector<double> means;
    means.reserve(chains.size());
    for (const auto& c : chains) {
      const double mu = c.samples.col(j).mean();
      means.push_back(mu);
      grand += mu / m;
      w += (c.samples.col(j).array() - mu).square().sum() /
           (static_cast<double>(n - 1) * m);
    }
    double b_over_n = 0.0;  // variance of the chain means
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand) / (m - 1.0);
    rhat(j) = w > 0.0 ? std::sqrt((w + b_over_n) / w) : (b_over_n > 0.0 ? inf : 1.0);
  }
  return rhat;
}

Eigen::VectorXd split_rhat(const std::vector<Chain>& chains) {
  std::vector<Chain> halves;
  halves.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index half = c.samples.rows() / 2;
    if (half < 2) throw input_error("chains too short to split");
    Chain a, b;
    a.parameter_names = b.parameter_names = c.parameter_names;
    a.samples = c.samples.topRows(half);
    b.samples = c.samples.bottomRows(half);
    a.log_posterior = c.log_posterior.head(half);
    b.log_posterior = c.log_posterior.tail(half);
    halves.push_back(std::move(a));
    halves.push_back(std::move(b));
  }
  return rhat_diagnostic(halves);
}

PosteriorBand posterior_predictive(const Chain& chain,
                                   const std::vector<double>& strain_grid,
                                   int max_draws) {
  if (chain.samples.cols() < 4)
    throw input_error("chain must hold the 4 global parameters");
  if (chain.samples.rows() < 1) throw input_error("chain holds no draws");
  if (max_draws < 1) throw input_error("max_draws must be positive");

  const Eigen::Index n = chain.samples.rows();
  const int n_use = static_cast<int>(std::min<Eigen::Index>(max_draws, n));
  std::vector<Eigen::Index> picks;
  picks.reserve(static_cast<std::size_t>(n_use));
  for (int i = 0; i < n_use; ++i)
    picks.push_back(n_use == 1 ? 0
                               : static_cast<Eigen::Index>(std::llround(
                                     static_cast<double>(i) * static_cast<double>(n - 1) /
                                     (n_use - 1))));

  const std::size_t g = strain_grid.size();
  // energies[draw] is a g x 6 block of branch energies
  std::vector<Eigen::MatrixXd> energies;
  energies.reserve(picks.size());
  std::string last_failure;
  for (const Eigen::Index row : picks) {
    FineStructureParams params;
    params.lambda_so = chain.samples(row, 0);
    params.d_es = chain.samples(row, 1);
    params.d1 = chain.samples(row, 2);
    params.d2 = chain.samples(row, 3);
    try {
      const auto sweep = strain_sweep(params, strain_grid);
      Eigen::MatrixXd block(g, 6);
      for (std::size_t i = 0; i < g; ++i)
        for (int lbl = 0; lbl < 6; ++lbl)
          block(static_cast<Eigen::Index>(i), lbl) =
              sweep[i][static_cast<LevelLabel>(lbl)].energy;
      energies.push_back(std::move(block));
    } catch (const numerical_error& err) {
      last_failure = err.what();  // isolated pathological draws are skipped
    }
  }
  if (energies.size() < std::max<std::size_t>(1, std::min<std::size_t>(10, picks.size()))) {
    throw numerical_error("posterior predictive failed: too few usable draws (" +
                          std::to_string(energies.size()) + "); last failure: " +
                          last_failure);
  }

  PosteriorBand band;
  band.delta_perp = strain_grid;
  band.q05.resize(static_cast<Eigen::Index>(g), 6);
  band.q50.resize(static_cast<Eigen::Index>(g), 6);
  band.q95.resize(static_cast<Eigen::Index>(g), 6);
  std::vector<double> vals(energies.size());
  for (std::size_t i = 0; i < g; ++i) {
    for (int lbl = 0; lbl < 6; ++lbl) {
      for (std::size_t k = 0; k < energies.size(); ++k)
        vals[k] = energies[k](static_cast<Eigen::Index>(i), lbl);
      std::sort(vals.begin(), vals.end());
      band.q05(static_cast<Eigen::Index>(i), lbl) = quantile_sorted(vals, 0.05);
      band.q50(static_cast<Eigen::Index>(i), lbl) = quantile_sorted(vals, 0.50);
      band.q95(static_cast<Eigen::Index>(i), lbl) = quantile_sorted(vals, 0.95);
    }
  }
  return band;
}

}  // namespace pl6::bayes
