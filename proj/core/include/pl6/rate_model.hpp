#pragma once

// Classical five-pool rate equations for resonant spin pumping: ground ms=0,
// ground ms=+-1 (one pool), the two excited counterparts and the metastable
// singlet shelf. Pump light drives the ms=+-1 pool; polarization builds up in
// ms=0 through the singlet branching. Rates in 1/ns, time in ns.

#include <vector>

#include <Eigen/Dense>

namespace pl6 {

/// Pool indices used throughout.
enum RatePool { pool_g0 = 0, pool_g1, pool_e0, pool_e1, pool_singlet };

struct RateModel {
  double pump_per_uw = 0.0;          ///< g1 -> e1 pumping per uW of laser power
  double off_resonant_fraction = 0;  ///< g0 -> e0 pump as a fraction of the above
  double radiative = 0.0;            ///< e0 -> g0 and e1 -> g1
  double isc_ms0 = 0.0;              ///< e0 -> singlet
  double isc_ms1 = 0.0;              ///< e1 -> singlet
  double singlet_decay = 0.0;        ///< total singlet depletion rate
  double branch_to_ms0 = 1.0;        ///< singlet fraction landing in g0
  Eigen::Matrix<double, 5, 1> initial{1.0 / 3, 2.0 / 3, 0, 0, 0};

  /// Nonnegative rates, branching in [0,1], populations >= 0 summing to 1
  /// within 1e-9. Throws input_error.
  void validate() const;
};

/// The 5x5 generator A with d n/dt = A n at the given laser power (uW).
/// Columns sum to zero (population conserving).
Eigen::Matrix<double, 5, 5> rate_matrix(const RateModel& model, double laser_power_uw);

struct RateTrajectory {
  std::vector<double> t;       ///< ns
  Eigen::MatrixXd populations; ///< row k = pools at t[k]
  std::vector<double> pl;      ///< radiative flux, 1/ns
};

/// Linear-ODE solution over the ascending grid (matrix-exponential
/// propagation, exact up to roundoff). PL(t) = radiative * (n_e0 + n_e1).
RateTrajectory simulate_pumping_decay(const RateModel& model, double laser_power_uw,
                                      const std::vector<double>& t_grid);

/// Saturation law r(P) = r_max * P / (P + p_sat); power in uW, rate in kHz.
double spin_flip_saturation(double power_uw, double r_max_khz, double p_sat_uw);

/// Square-root power scaling Omega = kappa * sqrt(P), kappa in GHz/sqrt(uW).
double rabi_frequency_from_power(double power_uw, double kappa);

}  // namespace pl6
