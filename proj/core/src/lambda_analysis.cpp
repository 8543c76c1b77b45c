#include "pl6/lambda_analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

#include "pl6/errors.hpp"
#include "pl6/fit/models.hpp"
#include "pl6/spectrum.hpp"

namespace pl6 {

namespace {

// Canonical lambda configuration for fitting: drive on level 0, recycle
// decay 2 -> 0 (back into the driven branch), leak decay 2 -> 1. Both runs
// map onto this by relabeling the two ground levels. Propagation is by
// matrix exponential of the generator, cached per distinct step so a uniform
// grid costs a single 9x9 expm per parameter evaluation.
Eigen::VectorXd lambda_rate_trace(double omega, double g_recycle, double g_leak,
                                  const Eigen::VectorXd& t) {
  LindbladModel model;
  model.hamiltonian = Eigen::MatrixXcd::Zero(3, 3);
  Eigen::MatrixXcd to_driven = Eigen::MatrixXcd::Zero(3, 3);
  to_driven(0, 2) = 1.0;
  Eigen::MatrixXcd to_dark = Eigen::MatrixXcd::Zero(3, 3);
  to_dark(1, 2) = 1.0;
  model.collapse_ops = {{to_driven, g_recycle}, {to_dark, g_leak}};
  DriveTerm drive;
  drive.omega_ghz = omega;
  drive.t_off_ns = t(t.size() - 1) + 1.0;
  drive.pairs = {{0, 2}};
  model.drive = drive;

  const Eigen::MatrixXcd gen = build_liouvillian(model, true);

  Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(9);
  rho(0) = 1.0;  // vec(|0><0|), column-major
  const double rate_sum = g_recycle + g_leak;

  Eigen::VectorXd y(t.size());
  std::map<std::uint64_t, Eigen::MatrixXcd> propagators;
  double t_prev = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double dt = t(i) - t_prev;
    if (dt > 0.0) {
      const auto key = std::bit_cast<std::uint64_t>(dt);
      auto it = propagators.find(key);
      if (it == propagators.end())
        it = propagators.emplace(key, Eigen::MatrixXcd((gen * dt).exp())).first;
      rho = it->second * rho;
    }
    t_prev = t(i);
    y(i) = rate_sum * rho(8).real();  // rho_22
  }
  return y;
}

fit::FitModel lambda_master_equation_model() {
  fit::FitModel m;
  m.name = "lambda_master_equation";
  m.param_names = {"log_omega", "log_recycle_rate", "log_leak_rate"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    return lambda_rate_trace(std::exp(p(0)), std::exp(p(1)), std::exp(p(2)), x);
  };
  return m;  // Jacobian by finite differences
}

}  // namespace

LambdaFit fit_lambda_photon_rate(const LambdaRun& run) {
  if (run.t.size() != run.photon_rate.size() || run.t.size() < 16)
    throw input_error("lambda run needs at least 16 matching time/rate samples");

  const double rate_max =
      *std::max_element(run.photon_rate.begin(), run.photon_rate.end());
  if (!(rate_max > 0.0)) throw input_error("photon-rate trace is identically zero");

  // The A2 population rings at the Rabi frequency, so the rate trace does
  // too; a periodogram pins Omega well enough to dodge the local minima of
  // the full model.
  const fit::SpectralPeak peak = fit::scan_dominant_frequency(run.t, run.photon_rate);
  double omega0 = peak.frequency;
  const double span = run.t.back() - run.t.front();
  if (!(omega0 > 0.0)) omega0 = 2.0 / span;

  const double rate_mean =
      std::accumulate(run.photon_rate.begin(), run.photon_rate.end(), 0.0) /
      static_cast<double>(run.photon_rate.size());
  const double g_tot0 = std::max(rate_mean / 0.2, 1e-4);  // <rho_22> ~ 0.2 when driven

  Spectrum data = Spectrum::make(run.t, run.photon_rate,
                                 std::vector<double>(run.t.size(), 1e-3 * rate_max),
                                 "ns", "1/ns");

  Eigen::VectorXd init(3), lo(3), hi(3);
  init << std::log(omega0), std::log(0.5 * g_tot0), std::log(0.5 * g_tot0);
  lo << std::log(omega0 / 8.0), std::log(1e-6), std::log(1e-6);
  hi << std::log(omega0 * 8.0), std::log(10.0), std::log(10.0);

  LambdaFit out;
  out.fit = fit::nlls_fit(lambda_master_equation_model(), data, init, lo, hi);
  out.omega_ghz = std::exp(out.fit.estimates(0));
  const double g_recycle = std::exp(out.fit.estimates(1));
  const double g_leak = std::exp(out.fit.estimates(2));
  out.recycle_time_ns = 1.0 / g_recycle;
  out.leak_time_ns = 1.0 / g_leak;
  if (out.fit.uncertainties.size() == 3) {
    // T = exp(-log_rate), so sigma_T = T * sigma_log
    out.recycle_sigma_ns = out.recycle_time_ns * out.fit.uncertainties(1);
    out.leak_sigma_ns = out.leak_time_ns * out.fit.uncertainties(2);
  }
  return out;
}

LambdaReciprocity lambda_reciprocity(double omega_ghz, double gamma_plus,
                                     double gamma_minus, double pulse_len_ns) {
  LambdaReciprocity rec;
  rec.gamma_plus = gamma_plus;
  rec.gamma_minus = gamma_minus;
  rec.drive_plus =
      fit_lambda_photon_rate(simulate_lambda_rabi(omega_ghz, SpinBranch::plus,
                                                  gamma_plus, gamma_minus, pulse_len_ns));
  rec.drive_minus =
      fit_lambda_photon_rate(simulate_lambda_rabi(omega_ghz, SpinBranch::minus,
                                                  gamma_plus, gamma_minus, pulse_len_ns));

  auto matches = [](double a, double sa, double b, double sb) {
    const double combined =
        std::max(std::hypot(sa, sb), 0.01 * 0.5 * (std::abs(a) + std::abs(b)));
    return std::abs(a - b) <= combined;
  };
  rec.reciprocal = rec.drive_plus.fit.converged && rec.drive_minus.fit.converged &&
                   matches(rec.drive_plus.recycle_time_ns, rec.drive_plus.recycle_sigma_ns,
                           rec.drive_minus.leak_time_ns, rec.drive_minus.leak_sigma_ns) &&
                   matches(rec.drive_minus.recycle_time_ns, rec.drive_minus.recycle_sigma_ns,
                           rec.drive_plus.leak_time_ns, rec.drive_plus.leak_sigma_ns);
  return rec;
}

}  // namespace pl6
