#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "pl6/errors.hpp"
#include "pl6/lindblad.hpp"
#include "pl6/pulse_sequence.hpp"
#include "pl6/rate_model.hpp"

using namespace pl6;

namespace {

constexpr double kPi = 3.14159265358979323846;

LindbladModel two_level_drive(double omega, double detuning, double t1) {
  LindbladModel m;
  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  if (t1 > 0.0 && std::isfinite(t1)) {
    Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(2, 2);
    lower(0, 1) = 1.0;
    m.collapse_ops.emplace_back(lower, 1.0 / t1);
  }
  DriveTerm drive;
  drive.omega_ghz = omega;
  drive.detuning_ghz = detuning;
  drive.t_on_ns = 0.0;
  drive.t_off_ns = 1e9;
  drive.pairs = {{0, 1}};
  m.drive = drive;
  return m;
}

std::vector<double> time_grid(double t_max, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = t_max * i / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("density matrix validation catches each invariant separately") {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
  rho(0, 0) = 1.0;
  CHECK_NOTHROW(validate_density_matrix(rho));

  Eigen::MatrixXcd bad_trace = rho * 1.5;
  CHECK_THROWS_AS(validate_density_matrix(bad_trace), input_error);

  Eigen::MatrixXcd non_herm = rho;
  non_herm(0, 1) = std::complex<double>(0.0, 1e-3);
  CHECK_THROWS_AS(validate_density_matrix(non_herm), input_error);

  Eigen::MatrixXcd negative = Eigen::MatrixXcd::Zero(2, 2);
  negative(0, 0) = 1.1;
  negative(1, 1) = -0.1;
  CHECK_THROWS_AS(validate_density_matrix(negative), input_error);
}

TEST_CASE("liouvillian preserves the trace for arbitrary models") {
  const auto m = two_level_drive(2.895, 0.3, 16.0);
  const Eigen::MatrixXcd gen = build_liouvillian(m, true);
  // trace(L rho) = 0 for all rho <=> vec(I)^T L = 0 (column-major vec)
  Eigen::VectorXcd vec_id = Eigen::VectorXcd::Zero(4);
  vec_id(0) = 1.0;
  vec_id(3) = 1.0;
  CHECK((vec_id.transpose() * gen).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resonant undamped drive gives exact Rabi oscillations") {
  auto m = two_level_drive(2.895, 0.0, std::numeric_limits<double>::infinity());
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  const auto grid = time_grid(2.0, 201);
  const auto states = evolve(m, rho0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double analytic = std::pow(std::sin(kPi * 2.895 * grid[i]), 2);
    CHECK(std::abs(states[i](1, 1).real() - analytic) < 1e-9);
  }
}

TEST_CASE("pure radiative decay is exponential at machine precision") {
  LindbladModel m;
  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(2, 2);
  lower(0, 1) = 1.0;
  m.collapse_ops.emplace_back(lower, 1.0 / 16.0);
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(1, 1) = 1.0;
  const auto grid = time_grid(80.0, 81);
  const auto states = evolve(m, rho0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(states[i](1, 1).real() - std::exp(-grid[i] / 16.0)) < 1e-12);
}

TEST_CASE("detuned drive reaches the generalized-Rabi peak population") {
  const double omega = 1.0, delta = 0.75;
  auto m = two_level_drive(omega, delta, std::numeric_limits<double>::infinity());
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  const double omega_gen = std::hypot(omega, delta);
  // sample exactly at the first population maximum t = 1/(2*omega_gen)
  const std::vector<double> grid = {0.0, 0.5 / omega_gen};
  const auto states = evolve(m, rho0, grid);
  const double expected = omega * omega / (omega * omega + delta * delta);
  CHECK(std::abs(states[1](1, 1).real() - expected) < 1e-9);
}

TEST_CASE("driven-damped evolution keeps every state physical") {
  auto m = two_level_drive(2.895, 0.0, 16.0);
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  const auto grid = time_grid(50.0, 501);
  const auto states = evolve(m, rho0, grid);  // evolve validates internally
  for (const auto& rho : states) {
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("drive window switches the generator at the pulse edges") {
  auto m = two_level_drive(2.895, 0.0, std::numeric_limits<double>::infinity());
  m.drive->t_off_ns = 0.5;  // pulse ends mid-grid
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  const auto states = evolve(m, rho0, {0.0, 0.5, 1.0, 2.0});
  const double frozen = states[1](1, 1).real();
  // no dissipation and no drive after t_off: population is frozen
  CHECK(std::abs(states[2](1, 1).real() - frozen) < 1e-12);
  CHECK(std::abs(states[3](1, 1).real() - frozen) < 1e-12);
}

TEST_CASE("model validation rejects malformed inputs") {
  LindbladModel m;
  m.hamiltonian = Eigen::MatrixXcd::Zero(1, 1);
  CHECK_THROWS_AS(m.validate(), input_error);  // dimension too small

  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  m.hamiltonian(0, 1) = 1.0;  // not Hermitian
  CHECK_THROWS_AS(m.validate(), input_error);

  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  m.collapse_ops.emplace_back(Eigen::MatrixXcd::Zero(3, 3), 1.0);  // wrong shape
  CHECK_THROWS_AS(m.validate(), input_error);

  m.collapse_ops.clear();
  m.collapse_ops.emplace_back(Eigen::MatrixXcd::Zero(2, 2), -1.0);  // negative rate
  CHECK_THROWS_AS(m.validate(), input_error);

  m.collapse_ops.clear();
  DriveTerm d;
  d.pairs = {{0, 5}};  // out of range
  m.drive = d;
  CHECK_THROWS_AS(m.validate(), input_error);
}

TEST_CASE("evolve rejects a bad time grid") {
  auto m = two_level_drive(1.0, 0.0, 16.0);
  Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;
  CHECK_THROWS_AS(evolve(m, rho0, {1.0, 0.5}), input_error);
  CHECK_THROWS_AS(evolve(m, rho0, {}), input_error);
}

TEST_CASE("optical Rabi trace has 100 ps bins and a damped envelope") {
  const auto trace = simulate_optical_rabi(2.895, 0.0, 16.0, 2.0);
  REQUIRE(trace.t.size() == trace.value.size());
  REQUIRE(trace.t.size() >= 20);
  CHECK(trace.t.front() == doctest::Approx(0.0));
  CHECK(trace.t[1] - trace.t[0] == doctest::Approx(0.1).epsilon(1e-12));
  // all populations in [0, 1]
  for (const double v : trace.value) {
    CHECK(v >= -1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
  // undamped limit touches 1; damped must stay measurably below after t=0
  double peak = 0.0;
  for (const double v : trace.value) peak = std::max(peak, v);
  CHECK(peak < 1.0);
  CHECK(peak > 0.8);
}

TEST_CASE("lambda run conserves population and reports the emission rate") {
  const double gp = 1.0 / 15.0, gm = 1.0 / 19.0;
  const auto run = simulate_lambda_rabi(1.6, SpinBranch::plus, gp, gm, 20.0);
  REQUIRE(run.t.size() == run.pop_plus.size());
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    const double total = run.pop_plus[i] + run.pop_minus[i] + run.pop_a2[i];
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(std::abs(run.photon_rate[i] - (gp + gm) * run.pop_a2[i]) < 1e-12);
  }
  // driving |+1> leaks population into the dark |-1> branch
  CHECK(run.pop_minus.back() > 0.3);
  CHECK(run.pop_plus.back() < run.pop_plus.front());
}

TEST_CASE("quarter-wave-plate weights are complementary and hit the extremes") {
  for (double theta = -90.0; theta <= 270.0; theta += 7.5) {
    const double wp = qwp_excitation_weight(theta, SpinBranch::plus);
    const double wm = qwp_excitation_weight(theta, SpinBranch::minus);
    CHECK(wp >= 0.0);
    CHECK(wp <= 1.0);
    CHECK(std::abs(wp + wm - 1.0) < 1e-12);
  }
  CHECK(qwp_excitation_weight(45.0, SpinBranch::plus) == doctest::Approx(1.0));
  CHECK(qwp_excitation_weight(135.0, SpinBranch::plus) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(qwp_excitation_weight(0.0, SpinBranch::plus) == doctest::Approx(0.5));
}

TEST_CASE("rate matrix conserves population") {
  RateModel m;
  m.pump_per_uw = 0.5 / 60.0;
  m.radiative = 1.0 / 14.0;
  m.isc_ms0 = 0.002;
  m.isc_ms1 = 0.012;
  m.singlet_decay = 1.0 / 300.0;
  m.branch_to_ms0 = 0.9954;
  const auto a = rate_matrix(m, 60.0);
  CHECK(a.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("pumping transient stays a probability distribution and polarizes") {
  RateModel m;
  m.pump_per_uw = 0.5 / 60.0;
  m.radiative = 1.0 / 14.0;
  m.isc_ms0 = 0.002;
  m.isc_ms1 = 0.012;
  m.singlet_decay = 1.0 / 300.0;
  m.branch_to_ms0 = 0.9954;
  std::vector<double> grid;
  for (int i = 0; i <= 750; ++i) grid.push_back(2.0 * i);
  const auto traj = simulate_pumping_decay(m, 60.0, grid);
  REQUIRE(traj.populations.rows() == static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index r = 0; r < traj.populations.rows(); ++r) {
    CHECK(traj.populations.row(r).minCoeff() > -1e-12);
    CHECK(std::abs(traj.populations.row(r).sum() - 1.0) < 1e-9);
  }
  // photoluminescence definition and eventual spin polarization into ms=0
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(traj.pl[i] - m.radiative * (traj.populations(static_cast<Eigen::Index>(i), pool_e0) +
                                               traj.populations(static_cast<Eigen::Index>(i), pool_e1))) < 1e-12);
  CHECK(traj.populations(traj.populations.rows() - 1, pool_g0) > 0.9);
  CHECK(traj.pl.back() < 0.02 * *std::max_element(traj.pl.begin(), traj.pl.end()));
}

TEST_CASE("rate model validation") {
  RateModel m;
  m.branch_to_ms0 = 1.2;
  CHECK_THROWS_AS(m.validate(), input_error);
  m = {};
  m.radiative = -0.1;
  CHECK_THROWS_AS(m.validate(), input_error);
  m = {};
  m.initial << 0.5, 0.2, 0, 0, 0;  // does not sum to 1
  CHECK_THROWS_AS(m.validate(), input_error);
}

TEST_CASE("saturation and power-scaling helpers") {
  CHECK(spin_flip_saturation(6.2, 0.46, 6.2) == doctest::Approx(0.23));
  CHECK(spin_flip_saturation(0.0, 0.46, 6.2) == doctest::Approx(0.0));
  const double kappa = 2.895 / std::sqrt(60.0);
  CHECK(rabi_frequency_from_power(60.0, kappa) == doctest::Approx(2.895));
  CHECK(rabi_frequency_from_power(23.8, kappa) == doctest::Approx(1.8233).epsilon(1e-3));
}

TEST_CASE("pulse sequences count rotations and free evolution") {
  const auto hahn = hahn_sequence(10.0);
  CHECK_NOTHROW(hahn.validate());
  CHECK(hahn.pi_pulse_count() == 1);
  CHECK(hahn.free_evolution_ns() == doctest::Approx(20.0));

  const auto xy8 = xy8_sequence(2, 5.0);
  CHECK_NOTHROW(xy8.validate());
  CHECK(xy8.pi_pulse_count() == 16);
  CHECK(xy8.free_evolution_ns() == doctest::Approx(16 * 5.0));

  PulseSequence bad;
  bad.elements.push_back({PulseKind::pi_x, 3.0, 0.0});  // rotations carry no duration
  CHECK_THROWS_AS(bad.validate(), input_error);
  CHECK_THROWS_AS(PulseSequence{}.validate(), input_error);
}
