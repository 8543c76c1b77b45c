#pragma once

// Lindblad master-equation dynamics for few-level driven systems.
//
// Hamiltonians are in GHz (ordinary frequency); rates in 1/ns; time in ns.
// The 2*pi conversion to angular frequency happens exactly once, inside
// build_liouvillian: d rho/dt = -i*2*pi*[H, rho] + dissipators.

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pl6/time_series.hpp"

namespace pl6 {

using DensityMatrix = Eigen::MatrixXcd;

/// Coherent drive in the rotating frame: couples the listed level pairs with
/// matrix element omega/2 each, detuning added on the upper level of every
/// pair, active only inside [t_on, t_off].
struct DriveTerm {
  double omega_ghz = 0.0;
  double detuning_ghz = 0.0;
  double t_on_ns = 0.0;
  double t_off_ns = 0.0;
  std::vector<std::pair<int, int>> pairs;  ///< (lower, upper) level indices
};

struct LindbladModel {
  Eigen::MatrixXcd hamiltonian;  ///< GHz, Hermitian
  std::vector<std::pair<Eigen::MatrixXcd, double>> collapse_ops;  ///< (c, rate 1/ns)
  std::optional<DriveTerm> drive;

  int dim() const { return static_cast<int>(hamiltonian.rows()); }
  /// Dimension 2..7, Hermiticity within 1e-12, nonnegative rates, matching
  /// collapse-operator shapes, drive pairs in range. Throws input_error.
  void validate() const;
};

/// Hermiticity/trace/positivity gate for a density matrix (tolerances 1e-10,
/// 1e-9, -1e-9). Throws input_error naming the violated invariant.
void validate_density_matrix(const DensityMatrix& rho);

/// Vectorized generator (column-major) of the master equation, dim^2 x dim^2,
/// in 1/ns. `with_drive` selects whether the drive term (if any) is folded
/// into the Hamiltonian; evolve() switches generators at the pulse window
/// edges.
Eigen::MatrixXcd build_liouvillian(const LindbladModel& model, bool with_drive = true);

/// Evolves rho0 over an ascending time grid starting at t_grid[0] >= 0. The
/// generator is piecewise constant (drive on/off), so each segment is
/// propagated by an exact cached matrix exponential; accuracy is at the
/// eigensolver level rather than an integration tolerance. Every returned
/// state satisfies the density-matrix invariants.
std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                  const std::vector<double>& t_grid);

/// Two-level resonantly driven decay: drive omega between |g>=0 and |e>=1,
/// radiative decay rate 1/t1, optional pure dephasing. Excited population
/// sampled on 100 ps bins over [0, pulse_len].
TimeSeries simulate_optical_rabi(double omega_ghz, double detuning_ghz, double t1_ns,
                                 double pulse_len_ns, double dephasing_rate = 0.0);

enum class SpinBranch { plus, minus };

/// Three-level lambda run: levels {0:|+1>, 1:|-1>, 2:|A2>}, radiative decay
/// A2 -> |+1> at gamma_plus and A2 -> |-1> at gamma_minus, resonant drive on
/// the selected branch. photon_rate = (gamma_plus + gamma_minus) * rho_A2A2.
struct LambdaRun {
  std::vector<double> t;
  std::vector<double> pop_plus, pop_minus, pop_a2;
  std::vector<double> photon_rate;  ///< 1/ns
};

LambdaRun simulate_lambda_rabi(double omega_ghz, SpinBranch branch, double gamma_plus,
                               double gamma_minus, double pulse_len_ns);

/// Relative drive intensity of a spin branch behind a quarter-wave plate at
/// angle theta (degrees): sigma-+ content of linear input light, with the
/// plus branch driven by sigma- light. Weights of the two branches sum to 1.
double qwp_excitation_weight(double theta_deg, SpinBranch branch);

}  // namespace pl6
