#include "pl6/lindblad.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "pl6/errors.hpp"

namespace pl6 {

namespace {

constexpr double two_pi = 6.283185307179586476925286766559;
constexpr double bin_ns = 0.1;  // 100 ps detection bins

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXcd drive_hamiltonian(const LindbladModel& model) {
  Eigen::MatrixXcd h = model.hamiltonian;
  if (model.drive) {
    const DriveTerm& d = *model.drive;
    for (auto [lo, up] : d.pairs) {
      h(lo, up) += 0.5 * d.omega_ghz;
      h(up, lo) += 0.5 * d.omega_ghz;
      h(up, up) += d.detuning_ghz;
    }
  }
  return h;
}

// Exact propagation for a piecewise-constant generator; the propagator for
// each distinct step is computed once, so uniform grids cost a single matrix
// exponential per drive segment.
class SegmentPropagator {
 public:
  explicit SegmentPropagator(const Eigen::MatrixXcd& gen) : gen_(&gen) {}

  void advance(Eigen::VectorXcd& y, double dt) {
    if (dt <= 0.0) return;
    const auto key = std::bit_cast<std::uint64_t>(dt);
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, Eigen::MatrixXcd((*gen_ * dt).exp())).first;
    y = it->second * y;
  }

 private:
  const Eigen::MatrixXcd* gen_;
  std::map<std::uint64_t, Eigen::MatrixXcd> cache_;
};

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& y, int dim) {
  return Eigen::Map<const Eigen::MatrixXcd>(y.data(), dim, dim);
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& rho) {
  return Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
}

std::vector<double> uniform_bins(double length_ns) {
  const int n = static_cast<int>(std::floor(length_ns / bin_ns + 1e-9));
  std::vector<double> t(n + 1);
  for (int k = 0; k <= n; ++k) t[k] = k * bin_ns;
  return t;
}

}  // namespace

void LindbladModel::validate() const {
  const int d = dim();
  if (d < 2 || d > 7 || hamiltonian.cols() != d)
    throw input_error("Lindblad model needs a square Hamiltonian of dimension 2..7");
  if (!hamiltonian.allFinite()) throw input_error("Hamiltonian has non-finite entries");
  if ((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw input_error("Hamiltonian is not Hermitian within 1e-12");
  for (const auto& [c, rate] : collapse_ops) {
    if (c.rows() != d || c.cols() != d)
      throw input_error("collapse operator dimension mismatch");
    if (!c.allFinite() || !std::isfinite(rate) || rate < 0.0)
      throw input_error("collapse rates must be finite and nonnegative");
  }
  if (drive) {
    const DriveTerm& dr = *drive;
    if (!std::isfinite(dr.omega_ghz) || dr.omega_ghz < 0.0)
      throw input_error("drive Rabi frequency must be finite and nonnegative");
    if (!std::isfinite(dr.detuning_ghz)) throw input_error("drive detuning must be finite");
    if (!(dr.t_on_ns <= dr.t_off_ns)) throw input_error("drive window is inverted");
    if (dr.pairs.empty()) throw input_error("drive needs at least one level pair");
    for (auto [lo, up] : dr.pairs)
      if (lo < 0 || up < 0 || lo >= d || up >= d || lo == up)
        throw input_error("drive level pair out of range");
  }
}

void validate_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0)
    throw input_error("density matrix must be square");
  if (!rho.allFinite()) throw input_error("density matrix has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw input_error("density matrix is not Hermitian within 1e-10");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
    throw input_error("density matrix trace deviates from 1 by more than 1e-9");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> s(rho, Eigen::EigenvaluesOnly);
  if (s.eigenvalues().minCoeff() <= -1e-9)
    throw input_error("density matrix has an eigenvalue below -1e-9");
}

Eigen::MatrixXcd build_liouvillian(const LindbladModel& model, bool with_drive) {
  model.validate();
  const int d = model.dim();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  const Eigen::MatrixXcd h =
      with_drive ? drive_hamiltonian(model) : model.hamiltonian;

  const std::complex<double> i(0.0, 1.0);
  Eigen::MatrixXcd l = -i * two_pi * (kron(eye, h) - kron(h.transpose(), eye));
  for (const auto& [c, rate] : model.collapse_ops) {
    const Eigen::MatrixXcd cdc = c.adjoint() * c;
    l += rate * (kron(c.conjugate(), c) -
                 0.5 * (kron(eye, cdc) + kron(cdc.transpose(), eye)));
  }
  return l;
}

std::vector<DensityMatrix> evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                  const std::vector<double>& t_grid) {
  model.validate();
  validate_density_matrix(rho0);
  if (rho0.rows() != model.dim())
    throw input_error("initial state dimension does not match the model");
  if (t_grid.empty()) throw input_error("time grid is empty");
  if (!(t_grid.front() >= 0.0)) throw input_error("time grid must start at t >= 0");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!std::isfinite(t_grid[k])) throw input_error("time grid has non-finite entries");
    if (k > 0 && t_grid[k] < t_grid[k - 1])
      throw input_error("time grid must be ascending");
  }

  const Eigen::MatrixXcd gen_off = build_liouvillian(model, false);
  Eigen::MatrixXcd gen_on;
  double w_on = 0.0, w_off = -1.0;
  if (model.drive) {
    gen_on = build_liouvillian(model, true);
    w_on = model.drive->t_on_ns;
    w_off = model.drive->t_off_ns;
  }
  SegmentPropagator prop_off(gen_off);
  SegmentPropagator prop_on(model.drive ? gen_on : gen_off);

  // propagate piecewise-constant segments exactly, breaking at window edges
  Eigen::VectorXcd y = vec(rho0);
  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());
  double t = 0.0;
  for (double target : t_grid) {
    while (t < target) {
      double stop = target;
      bool driven = false;
      if (model.drive) {
        if (t < w_on) {
          stop = std::min(stop, w_on);
        } else if (t < w_off) {
          stop = std::min(stop, w_off);
          driven = true;
        }
      }
      (driven ? prop_on : prop_off).advance(y, stop - t);
      t = stop;
    }
    DensityMatrix rho = unvec(y, model.dim());
    validate_density_matrix(rho);  // trace/positivity drift is a hard failure
    out.push_back(std::move(rho));
  }
  return out;
}

TimeSeries simulate_optical_rabi(double omega_ghz, double detuning_ghz, double t1_ns,
                                 double pulse_len_ns, double dephasing_rate) {
  if (!(omega_ghz >= 0.0) || !std::isfinite(omega_ghz))
    throw input_error("Rabi frequency must be finite and nonnegative");
  if (!(t1_ns > 0.0)) throw input_error("T1 must be positive");
  if (!(pulse_len_ns > 0.0)) throw input_error("pulse length must be positive");
  if (!(dephasing_rate >= 0.0)) throw input_error("dephasing rate must be nonnegative");

  LindbladModel m;
  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(2, 2);
  lower(0, 1) = 1.0;  // |g><e|
  m.collapse_ops.emplace_back(lower, 1.0 / t1_ns);
  if (dephasing_rate > 0.0) {
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(2, 2);
    proj(1, 1) = 1.0;
    m.collapse_ops.emplace_back(proj, dephasing_rate);
  }
  m.drive = DriveTerm{omega_ghz, detuning_ghz, 0.0, pulse_len_ns, {{0, 1}}};

  DensityMatrix rho0 = Eigen::MatrixXcd::Zero(2, 2);
  rho0(0, 0) = 1.0;

  TimeSeries ts;
  ts.t = uniform_bins(pulse_len_ns);
  const auto traj = evolve(m, rho0, ts.t);
  ts.value.reserve(traj.size());
  for (const auto& rho : traj) ts.value.push_back(rho(1, 1).real());
  return ts;
}

LambdaRun simulate_lambda_rabi(double omega_ghz, SpinBranch branch, double gamma_plus,
                               double gamma_minus, double pulse_len_ns) {
  if (!(gamma_plus > 0.0) || !(gamma_minus > 0.0))
    throw input_error("lambda decay rates must be positive");
  if (!(omega_ghz >= 0.0)) throw input_error("drive must be nonnegative");
  if (!(pulse_len_ns > 0.0)) throw input_error("pulse length must be positive");

  const int driven = branch == SpinBranch::plus ? 0 : 1;
  LindbladModel m;
  m.hamiltonian = Eigen::MatrixXcd::Zero(3, 3);
  Eigen::MatrixXcd to_plus = Eigen::MatrixXcd::Zero(3, 3);
  to_plus(0, 2) = 1.0;
  Eigen::MatrixXcd to_minus = Eigen::MatrixXcd::Zero(3, 3);
  to_minus(1, 2) = 1.0;
  m.collapse_ops.emplace_back(to_plus, gamma_plus);
  m.collapse_ops.emplace_back(to_minus, gamma_minus);
  m.drive = DriveTerm{omega_ghz, 0.0, 0.0, pulse_len_ns, {{driven, 2}}};

  DensityMatrix rho0 = Eigen::MatrixXcd::Zero(3, 3);
  rho0(driven, driven) = 1.0;

  LambdaRun run;
  run.t = uniform_bins(pulse_len_ns);
  const auto traj = evolve(m, rho0, run.t);
  run.pop_plus.reserve(traj.size());
  run.pop_minus.reserve(traj.size());
  run.pop_a2.reserve(traj.size());
  run.photon_rate.reserve(traj.size());
  for (const auto& rho : traj) {
    run.pop_plus.push_back(rho(0, 0).real());
    run.pop_minus.push_back(rho(1, 1).real());
    run.pop_a2.push_back(rho(2, 2).real());
    run.photon_rate.push_back((gamma_plus + gamma_minus) * rho(2, 2).real());
  }
  return run;
}

double qwp_excitation_weight(double theta_deg, SpinBranch branch) {
  if (!std::isfinite(theta_deg)) throw input_error("QWP angle must be finite");
  const double s = std::sin(2.0 * theta_deg * two_pi / 360.0);
  // plus branch couples to sigma-minus light, minus branch to sigma-plus
  return branch == SpinBranch::plus ? 0.5 * (1.0 + s) : 0.5 * (1.0 - s);
}

}  // namespace pl6
