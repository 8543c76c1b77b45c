#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "pl6/errors.hpp"
#include "pl6/fine_structure.hpp"
#include "pl6/rng.hpp"

using namespace pl6;

namespace {
const std::array<double, 7> kStudyStrains = {0.688, 2.079, 4.505, 6.4,
                                             8.0,   10.2,  12.416};
}

TEST_CASE("spin-1 operators satisfy the angular momentum algebra") {
  const auto s = spin_operators();
  const std::complex<double> i(0.0, 1.0);
  CHECK(((s.sx * s.sy - s.sy * s.sx) - i * s.sz).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(((s.sy * s.sz - s.sz * s.sy) - i * s.sx).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(((s.sz * s.sx - s.sx * s.sz) - i * s.sy).cwiseAbs().maxCoeff() < 1e-14);
  // Casimir S^2 = s(s+1) = 2
  const Eigen::Matrix3cd s2 = s.sx * s.sx + s.sy * s.sy + s.sz * s.sz;
  CHECK((s2 - 2.0 * Eigen::Matrix3cd::Identity()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("excited-state Hamiltonian is Hermitian and traceless for random inputs") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    FineStructureParams p;
    p.lambda_so = rng.uniform(0.0, 20.0);
    p.d_es = rng.uniform(0.0, 5.0);
    p.d1 = rng.uniform(0.0, 1.0);
    p.d2 = rng.uniform(0.0, 2.0);
    const StrainVector strain{rng.uniform(-15.0, 15.0), rng.uniform(-15.0, 15.0)};
    const Matrix6cd h = build_es_hamiltonian(p, strain);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(h.trace()) < 1e-12);
  }
}

TEST_CASE("zero-strain level table is frozen") {
  const FineStructureParams p;
  const auto es = diagonalize(build_es_hamiltonian(p, {0.0, 0.0}));
  const auto set = classify_levels(es, p, {0.0, 0.0});

  CHECK(set[LevelLabel::A1].energy == doctest::Approx(-5.99833333).epsilon(1e-7));
  CHECK(set[LevelLabel::A2].energy == doctest::Approx(-4.85833333).epsilon(1e-7));
  CHECK(set[LevelLabel::Ex].energy == doctest::Approx(-0.62153600).epsilon(1e-6));
  CHECK(set[LevelLabel::Ey].energy == doctest::Approx(-0.62153600).epsilon(1e-6));
  CHECK(set[LevelLabel::E1].energy == doctest::Approx(6.04986933).epsilon(1e-7));
  CHECK(set[LevelLabel::E2].energy == doctest::Approx(6.04986933).epsilon(1e-7));

  // degeneracies at eigensolver precision
  CHECK(std::abs(set[LevelLabel::Ex].energy - set[LevelLabel::Ey].energy) < 1e-9);
  CHECK(std::abs(set[LevelLabel::E1].energy - set[LevelLabel::E2].energy) < 1e-9);

  // the A2-A1 gap is 4*D2 exactly
  CHECK(std::abs((set[LevelLabel::A2].energy - set[LevelLabel::A1].energy) -
                 4.0 * p.d2) < 1e-9);

  // spin character: Ex/Ey are the ms=0 branch, the others ms=+-1
  CHECK(set[LevelLabel::Ex].ms_weight[1] > 0.999);
  CHECK(set[LevelLabel::Ey].ms_weight[1] > 0.999);
  for (const auto label : {LevelLabel::A1, LevelLabel::A2, LevelLabel::E1, LevelLabel::E2})
    CHECK(set[label].ms_weight[1] < 1e-3);

  // energies sum to zero (traceless)
  double sum = 0.0;
  for (const auto& lvl : set.levels) sum += lvl.energy;
  CHECK(std::abs(sum) < 1e-9);
}

TEST_CASE("eigenvalues depend on the strain magnitude only when d1 vanishes") {
  // An orbital rotation of the strain vector can be undone by a spin rotation
  // about Sz for every term except the d1 mixing term, so the spectrum is a
  // function of |delta| exactly at d1 = 0 and to O(d1) otherwise.
  FineStructureParams p;
  p.d1 = 0.0;
  FineStructureParams full;  // defaults, d1 = 0.026
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double mag = rng.uniform(0.0, 14.0);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const StrainVector rotated{mag * std::cos(angle), mag * std::sin(angle)};
    const auto a = diagonalize(build_es_hamiltonian(p, rotated));
    const auto b = diagonalize(build_es_hamiltonian(p, {mag, 0.0}));
    CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-9);

    const auto fa = diagonalize(build_es_hamiltonian(full, rotated));
    const auto fb = diagonalize(build_es_hamiltonian(full, {mag, 0.0}));
    CHECK((fa.energies - fb.energies).cwiseAbs().maxCoeff() < 4.0 * full.d1);
  }
}

TEST_CASE("ground-state Hamiltonian is diagonal with the textbook spectrum") {
  const double d = 1.365, b = 5.7;
  const Eigen::Matrix3d h = build_gs_hamiltonian(d, b);
  CHECK(h(0, 0) == doctest::Approx(d / 3 + gamma_e_ghz_per_mt * b).epsilon(1e-12));
  CHECK(h(1, 1) == doctest::Approx(-2 * d / 3).epsilon(1e-12));
  CHECK(h(2, 2) == doctest::Approx(d / 3 - gamma_e_ghz_per_mt * b).epsilon(1e-12));
  CHECK(std::abs(h.sum() - h.diagonal().sum()) < 1e-15);  // off-diagonal zero
}

TEST_CASE("diagonalize rejects non-Hermitian input") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
  h(0, 1) = 1.0;  // no conjugate partner
  CHECK_THROWS_AS(diagonalize(h), input_error);
}

TEST_CASE("parameter gates") {
  FineStructureParams p;
  p.lambda_so = std::nan("");
  CHECK_THROWS_AS(p.require_finite(), input_error);
  p = {};
  p.lambda_so = -1.0;
  CHECK_THROWS_AS(p.require_physical(), input_error);
  p = {};
  p.d_gs = 0.0;
  CHECK_THROWS_AS(p.require_physical(), input_error);
  CHECK_NOTHROW(FineStructureParams{}.require_physical());
}

TEST_CASE("level labels round-trip through strings") {
  for (int k = 0; k < 6; ++k) {
    const auto label = static_cast<LevelLabel>(k);
    CHECK(level_label_from_string(to_string(label)) == label);
  }
  CHECK_THROWS_AS(level_label_from_string("Q7"), input_error);
}

TEST_CASE("strain sweep tracks continuous, complete branches") {
  const FineStructureParams p;
  std::vector<double> grid;
  for (int i = 0; i < 125; ++i) grid.push_back(12.416 * i / 124.0);
  const auto sets = strain_sweep(p, grid, 2);
  REQUIRE(sets.size() == grid.size());

  for (std::size_t i = 1; i < sets.size(); ++i) {
    for (int k = 0; k < 6; ++k) {
      const auto label = static_cast<LevelLabel>(k);
      const double step = std::abs(sets[i][label].energy - sets[i - 1][label].energy);
      CHECK(step < 0.25);  // no branch jumps on the published grid
    }
  }

  // endpoint: the ms=0 branches split by ~2*delta_perp
  const auto& last = sets.back();
  const double split =
      std::abs(last[LevelLabel::Ex].energy - last[LevelLabel::Ey].energy);
  CHECK(split >= 0.9 * 2.0 * grid.back());
}

TEST_CASE("strain sweep rejects a non-increasing grid") {
  CHECK_THROWS_AS(strain_sweep(FineStructureParams{}, {0.0, 1.0, 0.5}), input_error);
}

TEST_CASE("direct branch energies agree with classification everywhere") {
  const FineStructureParams p;
  for (const double s : kStudyStrains) {
    const StrainVector strain{s, 0.0};
    const auto direct = branch_energies_direct(p, strain);
    const auto set = classify_levels(diagonalize(build_es_hamiltonian(p, strain)), p,
                                     strain);
    for (int k = 0; k < 6; ++k)
      CHECK(std::abs(direct[static_cast<std::size_t>(k)] -
                     set[static_cast<LevelLabel>(k)].energy) < 1e-12);
  }
  // dense scan across the avoided crossing near 12.3 GHz
  for (int i = 0; i <= 60; ++i) {
    const StrainVector strain{12.416 * i / 60.0, 0.0};
    const auto direct = branch_energies_direct(p, strain);
    const auto set = classify_levels(diagonalize(build_es_hamiltonian(p, strain)), p,
                                     strain);
    for (int k = 0; k < 6; ++k)
      CHECK(std::abs(direct[static_cast<std::size_t>(k)] -
                     set[static_cast<LevelLabel>(k)].energy) < 1e-12);
  }
}

TEST_CASE("transition table is sorted and flags the ms=0 lines") {
  const FineStructureParams p;
  const StrainVector strain{0.688, 0.0};
  const auto set = classify_levels(diagonalize(build_es_hamiltonian(p, strain)), p,
                                   strain);
  const auto lines = transition_table(set);
  REQUIRE(lines.size() == 6);
  int ms0_count = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) CHECK(lines[i].offset >= lines[i - 1].offset);
    if (lines[i].ms0) ++ms0_count;
  }
  CHECK(ms0_count == 2);  // Ex and Ey
}
