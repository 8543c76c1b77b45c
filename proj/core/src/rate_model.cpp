#include "pl6/rate_model.hpp"

#include <bit>
#include <cmath>
#include <unordered_map>

#include <unsupported/Eigen/MatrixFunctions>

#include "pl6/errors.hpp"

namespace pl6 {

using Matrix5d = Eigen::Matrix<double, 5, 5>;
using Vector5d = Eigen::Matrix<double, 5, 1>;

void RateModel::validate() const {
  const double rates[] = {pump_per_uw, off_resonant_fraction, radiative,
                          isc_ms0,     isc_ms1,               singlet_decay};
  for (double r : rates)
    if (!std::isfinite(r) || r < 0.0)
      throw input_error("rate-model rates must be finite and nonnegative");
  if (!std::isfinite(branch_to_ms0) || branch_to_ms0 < 0.0 || branch_to_ms0 > 1.0)
    throw input_error("singlet branching ratio must lie in [0, 1]");
  if (!initial.allFinite() || initial.minCoeff() < 0.0)
    throw input_error("initial populations must be finite and nonnegative");
  if (std::abs(initial.sum() - 1.0) > 1e-9)
    throw input_error("initial populations must sum to 1 within 1e-9");
}

Matrix5d rate_matrix(const RateModel& model, double laser_power_uw) {
  model.validate();
  if (!std::isfinite(laser_power_uw) || laser_power_uw < 0.0)
    throw input_error("laser power must be finite and nonnegative");

  const double kp = model.pump_per_uw * laser_power_uw;
  const double ke0 = model.off_resonant_fraction * kp;
  const double gr = model.radiative;
  const double ks = model.singlet_decay;
  const double b0 = model.branch_to_ms0;

  Matrix5d a = Matrix5d::Zero();
  auto flow = [&a](int from, int to, double rate) {
    a(to, from) += rate;
    a(from, from) -= rate;
  };
  flow(pool_g1, pool_e1, kp);
  flow(pool_g0, pool_e0, ke0);
  flow(pool_e1, pool_g1, gr);
  flow(pool_e0, pool_g0, gr);
  flow(pool_e1, pool_singlet, model.isc_ms1);
  flow(pool_e0, pool_singlet, model.isc_ms0);
  flow(pool_singlet, pool_g0, b0 * ks);
  flow(pool_singlet, pool_g1, (1.0 - b0) * ks);
  return a;
}

RateTrajectory simulate_pumping_decay(const RateModel& model, double laser_power_uw,
                                      const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw input_error("time grid is empty");
  if (!(t_grid.front() >= 0.0)) throw input_error("time grid must start at t >= 0");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!std::isfinite(t_grid[k])) throw input_error("time grid has non-finite entries");
    if (k > 0 && t_grid[k] < t_grid[k - 1])
      throw input_error("time grid must be ascending");
  }

  const Matrix5d a = rate_matrix(model, laser_power_uw);

  // matrix-exponential propagation, cached per distinct step length
  std::unordered_map<std::uint64_t, Matrix5d> props;
  auto propagator = [&](double dt) -> const Matrix5d& {
    const auto key = std::bit_cast<std::uint64_t>(dt);
    auto it = props.find(key);
    if (it == props.end()) it = props.emplace(key, (a * dt).exp().eval()).first;
    return it->second;
  };

  RateTrajectory out;
  out.t = t_grid;
  out.populations.resize(static_cast<Eigen::Index>(t_grid.size()), 5);
  out.pl.reserve(t_grid.size());

  Vector5d n = model.initial;
  double t = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double dt = t_grid[k] - t;
    if (dt > 0.0) n = propagator(dt) * n;
    t = t_grid[k];
    out.populations.row(static_cast<Eigen::Index>(k)) = n.transpose();
    out.pl.push_back(model.radiative * (n(pool_e0) + n(pool_e1)));
  }
  return out;
}

double spin_flip_saturation(double power_uw, double r_max_khz, double p_sat_uw) {
  if (!std::isfinite(power_uw) || power_uw < 0.0)
    throw input_error("power must be finite and nonnegative");
  if (!(r_max_khz > 0.0) || !(p_sat_uw > 0.0))
    throw input_error("saturation parameters must be positive");
  return r_max_khz * power_uw / (power_uw + p_sat_uw);
}

double rabi_frequency_from_power(double power_uw, double kappa) {
  if (!std::isfinite(power_uw) || power_uw < 0.0)
    throw input_error("power must be finite and nonnegative");
  if (!std::isfinite(kappa) || kappa < 0.0)
    throw input_error("kappa must be finite and nonnegative");
  return kappa * std::sqrt(power_uw);
}

}  // namespace pl6
