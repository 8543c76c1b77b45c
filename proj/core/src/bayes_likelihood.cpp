#include "pl6/bayes/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pl6/errors.hpp"

namespace pl6::bayes {

void EmitterDataset::validate() const {
  if (lines.size() < 3)
    throw input_error("emitter '" + emitter + "' has " + std::to_string(lines.size()) +
                      " lines; need at least 3");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (!std::isfinite(lines[k].offset_ghz))
      throw input_error("emitter '" + emitter + "' line " + std::to_string(k) +
                        ": offset is not finite");
    if (!std::isfinite(lines[k].sigma_ghz) || lines[k].sigma_ghz <= 0.0)
      throw input_error("emitter '" + emitter + "' line " + std::to_string(k) +
                        ": sigma must be positive and finite");
  }
}

double log_likelihood(const FineStructureParams& globals,
                      const std::vector<double>& strains,
                      const std::vector<EmitterDataset>& datasets,
                      std::string* diagnostic) {
  if (strains.size() != datasets.size())
    throw input_error("need exactly one strain per emitter dataset");
  constexpr double log_sqrt_2pi = 0.91893853320467274178;

  double total = 0.0;
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const auto& ds = datasets[k];
    const StrainVector strain{strains[k], 0.0};
    const bool any_labeled =
        std::any_of(ds.lines.begin(), ds.lines.end(),
                    [](const MeasuredLine& l) { return l.label.has_value(); });

    // The Hamiltonian is traceless, so branch energies are already offsets
    // from the multiplet centroid. Unlabeled data only needs the sorted
    // eigenvalues; skipping the eigenvectors roughly halves the sampler cost.
    std::array<double, 6> by_label{};
    std::array<double, 6> sorted{};
    try {
      if (any_labeled) {
        by_label = branch_energies_direct(globals, strain);
        sorted = by_label;
        std::sort(sorted.begin(), sorted.end());
      } else {
        Eigen::SelfAdjointEigenSolver<Matrix6cd> solver(
            build_es_hamiltonian(globals, strain), Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success)
          throw numerical_error("eigenvalue solver failed for emitter '" + ds.emitter +
                                "'");
        for (int i = 0; i < 6; ++i) sorted[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
      }
    } catch (const numerical_error& err) {
      if (diagnostic) *diagnostic = err.what();
      return -std::numeric_limits<double>::infinity();
    }

    for (const auto& line : ds.lines) {
      double model = 0.0;
      if (line.label) {
        model = by_label[static_cast<std::size_t>(*line.label)];
      } else {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), line.offset_ghz);
        if (it == sorted.begin())
          model = *it;
        else if (it == sorted.end())
          model = sorted.back();
        else
          model = (*it - line.offset_ghz < line.offset_ghz - *(it - 1)) ? *it : *(it - 1);
      }
      const double z = (line.offset_ghz - model) / line.sigma_ghz;
      total += -0.5 * z * z - std::log(line.sigma_ghz) - log_sqrt_2pi;
    }
  }
  return total;
}

}  // namespace pl6::bayes
