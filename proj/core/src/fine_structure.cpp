#include "pl6/fine_structure.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "pl6/errors.hpp"

namespace pl6 {

namespace {

using Vector6cd = Eigen::Matrix<std::complex<double>, 6, 1>;
using cplx = std::complex<double>;

bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix6cd kron23(const Eigen::Matrix2cd& a, const Eigen::Matrix3cd& b) {
  Matrix6cd out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return out;
}

// Basis vector |orbital, ms>, orbital 0:|Ex> 1:|Ey>, ms index 0:+1 1:0 2:-1.
Vector6cd basis_ket(int orbital, int ms_index) {
  Vector6cd v = Vector6cd::Zero();
  v(3 * orbital + ms_index) = 1.0;
  return v;
}

// Analytic zero-strain targets used to anchor labels. e_pm are the orbital
// angular-momentum eigenstates (|Ex> +- i|Ey>)/sqrt(2).
std::array<Vector6cd, 6> label_targets() {
  const cplx i(0.0, 1.0);
  const double r2 = 1.0 / std::sqrt(2.0);
  auto ep = [&](int ms) -> Vector6cd { return r2 * (basis_ket(0, ms) + i * basis_ket(1, ms)); };
  auto em = [&](int ms) -> Vector6cd { return r2 * (basis_ket(0, ms) - i * basis_ket(1, ms)); };
  std::array<Vector6cd, 6> t;
  t[static_cast<int>(LevelLabel::A1)] = r2 * (ep(2) - em(0));
  t[static_cast<int>(LevelLabel::A2)] = r2 * (ep(2) + em(0));
  t[static_cast<int>(LevelLabel::E1)] = r2 * (ep(0) - em(2));
  t[static_cast<int>(LevelLabel::E2)] = r2 * (ep(0) + em(2));
  t[static_cast<int>(LevelLabel::Ex)] = basis_ket(0, 1);
  t[static_cast<int>(LevelLabel::Ey)] = basis_ket(1, 1);
  return t;
}

Eigen::Vector3d ms_weight_of(const Vector6cd& v) {
  Eigen::Vector3d w;
  for (int m = 0; m < 3; ++m) w(m) = std::norm(v(m)) + std::norm(v(3 + m));
  return w;
}

struct Aligned {
  std::array<Vector6cd, 6> states;  // indexed by LevelLabel
  std::array<double, 6> energies;
  double min_overlap = 1.0;  // min over labels of |<ref|state>|
  bool tie_broken = false;
};

// Rotates each (near-)degenerate eigenspace of `es` onto the reference
// directions, so branch identities survive exact degeneracies and close
// crossings. References must be (close to) orthonormal.
Aligned align_to_references(const EigenSystem& es,
                            const std::array<Vector6cd, 6>& refs,
                            double cluster_tol = 1e-6) {
  const int n = 6;
  // cluster consecutive eigenvalues
  std::vector<std::pair<int, int>> clusters;  // [first, last]
  for (int k = 0; k < n;) {
    int j = k;
    while (j + 1 < n && es.energies(j + 1) - es.energies(j) < cluster_tol) ++j;
    clusters.emplace_back(k, j);
    k = j + 1;
  }

  Aligned out;
  // choose the best cluster per label by projection norm
  std::array<int, 6> label_cluster{};
  std::array<double, 6> best_norm{};
  for (int lab = 0; lab < n; ++lab) {
    double best = -1.0, second = -1.0;
    int arg = 0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      auto [f, l] = clusters[c];
      double p2 = 0.0;
      for (int k = f; k <= l; ++k) p2 += std::norm(es.states.col(k).dot(refs[lab]));
      double p = std::sqrt(p2);
      if (p > best) {
        second = best;
        best = p;
        arg = static_cast<int>(c);
      } else if (p > second) {
        second = p;
      }
    }
    if (second >= 0.0 && best - second < 1e-6) out.tie_broken = true;
    label_cluster[lab] = arg;
    best_norm[lab] = best;
  }

  // within each cluster: project the claiming references and orthonormalize
  std::array<bool, 6> assigned{};
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    auto [f, l] = clusters[c];
    const int dim = l - f + 1;
    std::vector<int> labs;
    for (int lab = 0; lab < n; ++lab)
      if (label_cluster[lab] == static_cast<int>(c)) labs.push_back(lab);
    // oversubscribed cluster: keep the strongest claims, re-home the rest later
    if (static_cast<int>(labs.size()) > dim) {
      std::sort(labs.begin(), labs.end(),
                [&](int a, int b) { return best_norm[a] > best_norm[b]; });
      labs.resize(dim);
      std::sort(labs.begin(), labs.end());
      out.tie_broken = true;
    }
    std::vector<Vector6cd> ortho;
    for (int lab : labs) {
      Vector6cd p = Vector6cd::Zero();
      for (int k = f; k <= l; ++k) p += es.states.col(k).dot(refs[lab]) * es.states.col(k);
      for (const auto& q : ortho) p -= q.dot(p) * q;
      double nrm = p.norm();
      if (nrm < 1e-8) {  // reference collapsed onto an already-claimed direction
        out.tie_broken = true;
        // fall back to an unused basis vector of the cluster (energy order)
        for (int k = f; k <= l; ++k) {
          Vector6cd cand = es.states.col(k);
          for (const auto& q : ortho) cand -= q.dot(cand) * q;
          if (cand.norm() > 1e-8) {
            p = cand;
            nrm = p.norm();
            break;
          }
        }
      }
      p /= nrm;
      ortho.push_back(p);
      out.states[lab] = p;
      out.energies[lab] = es.energies(f);  // cluster energy (degenerate within tol)
      out.min_overlap = std::min(out.min_overlap, std::abs(p.dot(refs[lab])));
      assigned[lab] = true;
    }
    // exact per-member energies where the cluster is split below tol
    for (std::size_t m = 0; m < labs.size() && dim > 1; ++m) {
      // keep the energy of the dominant basis member for reportability
      int bestk = f;
      double bestov = -1.0;
      for (int k = f; k <= l; ++k) {
        double ov = std::abs(es.states.col(k).dot(out.states[labs[m]]));
        if (ov > bestov) {
          bestov = ov;
          bestk = k;
        }
      }
      out.energies[labs[m]] = es.energies(bestk);
    }
  }
  // any label left homeless (oversubscription overflow): assign leftover
  // eigenvectors in energy order
  std::vector<int> leftovers;
  for (int lab = 0; lab < n; ++lab)
    if (!assigned[lab]) leftovers.push_back(lab);
  if (!leftovers.empty()) {
    out.tie_broken = true;
    std::vector<int> free_cols;
    for (int k = 0; k < n; ++k) {
      bool used = false;
      for (int lab = 0; lab < n; ++lab)
        if (assigned[lab] && std::abs(es.states.col(k).dot(out.states[lab])) > 0.9) used = true;
      if (!used) free_cols.push_back(k);
    }
    for (std::size_t m = 0; m < leftovers.size() && m < free_cols.size(); ++m) {
      int lab = leftovers[m], k = free_cols[m];
      out.states[lab] = es.states.col(k);
      out.energies[lab] = es.energies(k);
      out.min_overlap = 0.0;
      assigned[lab] = true;
    }
  }
  return out;
}

std::array<Vector6cd, 6> zero_strain_references(const FineStructureParams& params,
                                                bool* tie_flag) {
  EigenSystem es0 = diagonalize(build_es_hamiltonian(params, StrainVector{}));
  Aligned a = align_to_references(es0, label_targets());
  if (tie_flag) *tie_flag = *tie_flag || a.tie_broken;
  return a.states;
}

// Continuation of the label references from zero strain to `strain`.
std::array<Vector6cd, 6> continued_references(const FineStructureParams& params,
                                              const StrainVector& strain,
                                              bool* tie_flag, double stride = 0.1,
                                              int min_steps = 24) {
  std::array<Vector6cd, 6> refs = zero_strain_references(params, tie_flag);
  const double mag = strain.magnitude();
  if (mag <= 0.0) return refs;
  const int steps = std::max(min_steps, static_cast<int>(std::ceil(mag / stride)));
  for (int k = 1; k <= steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    EigenSystem es = diagonalize(
        build_es_hamiltonian(params, StrainVector{s * strain.dx, s * strain.dy}));
    Aligned a = align_to_references(es, refs);
    if (tie_flag) *tie_flag = *tie_flag || a.tie_broken;
    refs = a.states;
  }
  return refs;
}

template <typename F>
void parallel_for(int n, int workers, F&& body) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2 * workers) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

void FineStructureParams::require_finite() const {
  if (!all_finite({lambda_so, d_es, d1, d2, d_gs}))
    throw input_error("fine-structure parameters must be finite");
}

void FineStructureParams::require_physical() const {
  require_finite();
  if (!(lambda_so > 0.0) || !(d_gs > 0.0) || d_es < 0.0 || d1 < 0.0 || d2 < 0.0)
    throw input_error(
        "fine-structure parameters out of range: need lambda_so > 0, d_gs > 0, "
        "d_es/d1/d2 >= 0");
}

double StrainVector::magnitude() const { return std::hypot(dx, dy); }

const char* to_string(LevelLabel label) {
  switch (label) {
    case LevelLabel::A1: return "A1";
    case LevelLabel::A2: return "A2";
    case LevelLabel::E1: return "E1";
    case LevelLabel::E2: return "E2";
    case LevelLabel::Ex: return "Ex";
    case LevelLabel::Ey: return "Ey";
  }
  return "?";
}

LevelLabel level_label_from_string(const std::string& name) {
  for (int k = 0; k < 6; ++k) {
    auto lab = static_cast<LevelLabel>(k);
    if (name == to_string(lab)) return lab;
  }
  throw input_error("unknown level label '" + name + "'");
}

const EnergyLevel& LevelSet::operator[](LevelLabel label) const {
  for (const auto& lv : levels)
    if (lv.label == label) return lv;
  throw numerical_error("level set is missing a label");  // unreachable by construction
}

SpinOperators spin_operators() {
  const double r2 = 1.0 / std::sqrt(2.0);
  const cplx i(0.0, 1.0);
  SpinOperators s;
  s.sx << 0, r2, 0, r2, 0, r2, 0, r2, 0;
  s.sy << 0, -i * r2, 0, i * r2, 0, -i * r2, 0, i * r2, 0;
  s.sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  return s;
}

Matrix6cd build_es_hamiltonian(const FineStructureParams& params,
                               const StrainVector& strain) {
  params.require_finite();
  if (!all_finite({strain.dx, strain.dy}))
    throw input_error("strain components must be finite");

  const auto [sx, sy, sz] = spin_operators();
  const Eigen::Matrix3cd i3 = Eigen::Matrix3cd::Identity();
  const cplx i(0.0, 1.0);

  Eigen::Matrix2cd lz, oz, ox;
  lz << 0, -i, i, 0;
  oz << 1, 0, 0, -1;
  ox << 0, 1, 1, 0;
  const Eigen::Matrix2cd i2 = Eigen::Matrix2cd::Identity();

  Matrix6cd h = params.lambda_so * kron23(lz, sz);
  h += params.d_es * kron23(i2, sz * sz - (2.0 / 3.0) * i3);
  h += params.d2 * (kron23(oz, sx * sx - sy * sy) + kron23(ox, sx * sy + sy * sx));
  h += params.d1 * (kron23(oz, sx * sz + sz * sx) - kron23(ox, sy * sz + sz * sy));
  h += strain.dx * kron23(oz, i3) - strain.dy * kron23(ox, i3);
  return h;
}

Eigen::Matrix3d build_gs_hamiltonian(double d_gs, double b_field_mt) {
  if (!all_finite({d_gs, b_field_mt}))
    throw input_error("ground-state Hamiltonian inputs must be finite");
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  const double third = d_gs / 3.0;
  h(0, 0) = third + gamma_e_ghz_per_mt * b_field_mt;
  h(1, 1) = -2.0 * third;
  h(2, 2) = third - gamma_e_ghz_per_mt * b_field_mt;
  return h;
}

EigenSystem diagonalize(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw input_error("diagonalize expects a square, nonempty matrix");
  const double herm = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (!(herm <= 1e-10))
    throw input_error("matrix is not Hermitian within 1e-10 (deviation " +
                      std::to_string(herm) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success)
    throw numerical_error("self-adjoint eigensolver failed to converge");
  return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

LevelSet level_set_from_alignment(const Aligned& a, const FineStructureParams& params,
                                  const StrainVector& strain, bool extra_tie) {
  LevelSet out;
  out.params = params;
  out.strain = strain;
  out.tie_broken = extra_tie || a.tie_broken;
  std::array<int, 6> order{0, 1, 2, 3, 4, 5};
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a.energies[x] < a.energies[y]; });
  for (int k = 0; k < 6; ++k) {
    const int lab = order[k];
    EnergyLevel lv;
    lv.label = static_cast<LevelLabel>(lab);
    lv.energy = a.energies[lab];
    lv.state = a.states[lab];
    lv.ms_weight = ms_weight_of(a.states[lab]);
    out.levels[k] = lv;
  }
  return out;
}

}  // namespace

LevelSet classify_levels(const EigenSystem& eigensystem,
                         const FineStructureParams& params,
                         const StrainVector& strain) {
  if (eigensystem.energies.size() != 6 || eigensystem.states.rows() != 6 ||
      eigensystem.states.cols() != 6)
    throw input_error("classify_levels expects a 6-level eigensystem");

  // cheap consistency gate: the eigensystem must belong to (params, strain)
  const Matrix6cd h = build_es_hamiltonian(params, strain);
  const double resid =
      (h * eigensystem.states - eigensystem.states * eigensystem.energies.asDiagonal())
          .cwiseAbs()
          .maxCoeff();
  if (!(resid < 1e-6))
    throw input_error("eigensystem does not match the given parameters and strain");

  bool tie = false;
  const auto refs = continued_references(params, strain, &tie);
  Aligned a = align_to_references(eigensystem, refs);
  return level_set_from_alignment(a, params, strain, tie);
}

std::vector<LevelSet> strain_sweep(const FineStructureParams& params,
                                   const std::vector<double>& delta_perp_grid,
                                   int workers) {
  if (delta_perp_grid.empty()) throw input_error("strain sweep grid is empty");
  for (std::size_t k = 0; k < delta_perp_grid.size(); ++k) {
    if (!std::isfinite(delta_perp_grid[k]) || delta_perp_grid[k] < 0.0)
      throw input_error("strain grid values must be finite and nonnegative");
    if (k > 0 && delta_perp_grid[k] <= delta_perp_grid[k - 1])
      throw input_error("strain grid must be strictly increasing");
  }

  const int n = static_cast<int>(delta_perp_grid.size());
  std::vector<EigenSystem> systems(n);
  parallel_for(n, workers, [&](int k) {
    systems[k] = diagonalize(
        build_es_hamiltonian(params, StrainVector{delta_perp_grid[k], 0.0}));
  });

  bool tie = false;
  std::array<Vector6cd, 6> refs =
      continued_references(params, StrainVector{delta_perp_grid[0], 0.0}, &tie);
  std::vector<LevelSet> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      // Keep the reference chain adiabatic on coarse grids too: walk wide
      // gaps at the same 0.1 GHz stride the single-point walks use, so the
      // labels match classify_levels regardless of the requested grid.
      const double lo = delta_perp_grid[k - 1], hi = delta_perp_grid[k];
      const int sub = static_cast<int>(std::ceil((hi - lo) / 0.1));
      for (int j = 1; j < sub; ++j) {
        const double s = lo + (hi - lo) * j / sub;
        Aligned step = align_to_references(
            diagonalize(build_es_hamiltonian(params, StrainVector{s, 0.0})), refs);
        tie = tie || step.tie_broken;
        refs = step.states;
      }
    }
    Aligned a = align_to_references(systems[k], refs);
    if (!(a.min_overlap > 0.5))
      throw numerical_error(
          "adiabatic tracking lost near delta_perp = " +
          std::to_string(delta_perp_grid[k]) +
          " (best eigenvector overlap <= 0.5); refine the strain grid");
    out.push_back(level_set_from_alignment(a, params,
                                           StrainVector{delta_perp_grid[k], 0.0}, tie));
    tie = false;  // anchor/sub-step ties only mark the point they precede
    refs = a.states;
  }
  return out;
}

std::array<double, 6> branch_energies_direct(const FineStructureParams& params,
                                             const StrainVector& strain) {
  // Same 0.1 GHz walk stride as classify_levels: near-degenerate branch
  // crossings (the ms0 branch cuts through the A2 branch around 12.3 GHz for
  // the default parameters) flip labels under a coarser walk. The saving
  // over classify_levels is the skipped LevelSet construction and the lower
  // minimum step count at small strain.
  const auto refs = continued_references(params, strain, nullptr, 0.1, 2);
  EigenSystem es = diagonalize(build_es_hamiltonian(params, strain));
  Aligned a = align_to_references(es, refs);
  return a.energies;
}

std::vector<TransitionLine> transition_table(const LevelSet& levels) {
  std::vector<TransitionLine> lines;
  lines.reserve(6);
  for (const auto& lv : levels.levels)
    lines.push_back(TransitionLine{lv.label, lv.energy, lv.ms_weight(1) > 0.5});
  std::sort(lines.begin(), lines.end(),
            [](const TransitionLine& a, const TransitionLine& b) {
              return a.offset < b.offset;
            });
  return lines;
}

}  // namespace pl6
