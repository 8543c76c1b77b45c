#pragma once

// Excited-state fine structure of a C3v color-center spin-1 triplet.
//
// Product basis, frozen throughout the library and its file formats:
//   index = orbital * 3 + spin,  orbital in {0:|Ex>, 1:|Ey>},
//   spin in {0:|ms=+1>, 1:|ms=0>, 2:|ms=-1>}.
// All energies are in GHz; strain components in GHz. The full operator
// convention, including the written-out 6x6 matrix, lives in
// docs/fine_structure.md and must not be changed without revisiting every
// frozen test value.

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pl6 {

using Matrix6cd = Eigen::Matrix<std::complex<double>, 6, 6>;

/// Electron gyromagnetic ratio for the ground-state Zeeman term, GHz/mT.
inline constexpr double gamma_e_ghz_per_mt = 0.028025;

/// Fine-structure parameters, all in GHz.
struct FineStructureParams {
  double lambda_so = 5.739;  ///< axial spin-orbit
  double d_es = 0.932;       ///< axial excited-state spin-spin
  double d1 = 0.026;         ///< transverse spin-spin, single spin quantum
  double d2 = 0.285;         ///< transverse spin-spin, double spin quantum
  double d_gs = 1.365;       ///< ground-state zero-field splitting

  /// Rejects NaN/inf fields. Throws input_error.
  void require_finite() const;
  /// Physical-range gate: lambda_so > 0, d_gs > 0, others >= 0 and finite.
  void require_physical() const;
};

/// Transverse strain (or effective electric field) acting on the orbital
/// doublet, in GHz. The sweep convention is (dx, dy) = (delta_perp, 0).
struct StrainVector {
  double dx = 0.0;
  double dy = 0.0;
  double magnitude() const;
};

enum class LevelLabel : std::uint8_t { A1 = 0, A2, E1, E2, Ex, Ey };
const char* to_string(LevelLabel label);
LevelLabel level_label_from_string(const std::string& name);

/// One excited-state level: label, centroid-referenced energy, spin character
/// and the eigenvector in the frozen product basis.
struct EnergyLevel {
  LevelLabel label = LevelLabel::A1;
  double energy = 0.0;             ///< GHz, relative to the multiplet centroid
  Eigen::Vector3d ms_weight;       ///< populations on ms = +1, 0, -1
  Eigen::Matrix<std::complex<double>, 6, 1> state;
};

/// The six classified levels, sorted ascending in energy, together with the
/// parameters and strain they were computed from.
struct LevelSet {
  FineStructureParams params;
  StrainVector strain;
  std::array<EnergyLevel, 6> levels;
  bool tie_broken = false;  ///< a degenerate label assignment needed a tie-break

  const EnergyLevel& operator[](LevelLabel label) const;
};

/// Optical line relative to the multiplet centroid (ground state common).
struct TransitionLine {
  LevelLabel upper = LevelLabel::A1;
  double offset = 0.0;  ///< GHz
  bool ms0 = false;     ///< true when the upper level is ms=0 dominant
};

struct SpinOperators {
  Eigen::Matrix3cd sx, sy, sz;
};

/// Standard spin-1 operators in the {|+1>, |0>, |-1>} basis.
SpinOperators spin_operators();

/// Frozen 6x6 excited-state Hamiltonian (see docs/fine_structure.md):
///   H = lambda*(Lz x Sz) + D_ES*(I x (Sz^2 - 2/3))
///     + D2*[sz x (Sx^2 - Sy^2) + sx x {Sx,Sy}]
///     + D1*[sz x {Sx,Sz} - sx x {Sy,Sz}]
///     + dx*(sz x I) - dy*(sx x I)
/// with Lz = [[0,-i],[i,0]], sz = diag(1,-1), sx = offdiag(1,1) on the
/// orbital doublet. Hermitian and traceless by construction. Accepts any
/// finite parameter values (the physical-range gate is a separate, stricter
/// check used by config validation and priors).
Matrix6cd build_es_hamiltonian(const FineStructureParams& params,
                               const StrainVector& strain);

/// Ground-state triplet Hamiltonian D_GS*(Sz^2 - 2/3) + gamma_e*B*Sz in GHz.
/// Real and diagonal in the ms basis; returned dense for uniformity.
Eigen::Matrix3d build_gs_hamiltonian(double d_gs, double b_field_mt);

struct EigenSystem {
  Eigen::VectorXd energies;  ///< ascending
  Eigen::MatrixXcd states;   ///< column k belongs to energies[k]
};

/// Self-adjoint diagonalization with a Hermiticity gate (tolerance 1e-10 on
/// the max element of H - H^dagger) and an explicit solver-failure error.
EigenSystem diagonalize(const Eigen::MatrixXcd& h);

/// Labels the six eigenstates of build_es_hamiltonian(params, strain).
/// At zero strain, labels come from overlap with the analytic
/// symmetry-adapted reference states; at finite strain they follow adiabatic
/// continuation of those references along s*(dx, dy), s in [0, 1].
/// Degenerate assignment ties (candidates within 1e-6) are broken by
/// ms_weight and then energy order, and flagged on the result.
LevelSet classify_levels(const EigenSystem& eigensystem,
                         const FineStructureParams& params,
                         const StrainVector& strain);

/// Adiabatic branch tracking over an increasing strain grid, strain applied
/// as (dx, dy) = (delta_perp, 0). Returns one classified LevelSet per grid
/// point. Adjacent points are paired by eigenvector overlap; a best overlap
/// at or below 0.5 aborts with advice to refine the grid. `workers`
/// parallelizes the per-point diagonalizations (output is order-independent).
std::vector<LevelSet> strain_sweep(const FineStructureParams& params,
                                   const std::vector<double>& delta_perp_grid,
                                   int workers = 1);

/// Optical lines of a classified level set, sorted ascending in offset.
std::vector<TransitionLine> transition_table(const LevelSet& levels);

/// Branch energies in LevelLabel order via the same adiabatic reference walk
/// as classify_levels, without building the LevelSet. Agrees with
/// classify_levels over the strain range of interest (pinned by tests);
/// intended for likelihood loops over labeled lines.
std::array<double, 6> branch_energies_direct(const FineStructureParams& params,
                                             const StrainVector& strain);

}  // namespace pl6
