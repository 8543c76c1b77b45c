#pragma once

// Gaussian likelihood of measured optical line offsets against the
// fine-structure model: shared global parameters, one transverse strain per
// emitter.

#include <optional>
#include <string>
#include <vector>

#include "pl6/fine_structure.hpp"

namespace pl6::bayes {

struct MeasuredLine {
  std::optional<LevelLabel> label;  ///< empty = unlabeled line
  double offset_ghz = 0.0;          ///< relative to the multiplet centroid
  double sigma_ghz = 1.0;
};

struct EmitterDataset {
  std::string emitter;
  std::vector<MeasuredLine> lines;

  /// At least 3 lines, all sigma > 0 and values finite. Throws input_error.
  void validate() const;
};

/// Sum over emitters and lines of log N(measured | model line, sigma),
/// including the -log(sigma*sqrt(2*pi)) normalization. Labeled lines match
/// their branch energy (direct symmetry-character assignment); unlabeled
/// lines match the nearest model eigenvalue. strains[k] pairs with
/// datasets[k]. A diagonalization failure returns -infinity (and stores the
/// message in *diagnostic when given) instead of throwing, so samplers can
/// treat it as zero posterior mass.
double log_likelihood(const FineStructureParams& globals,
                      const std::vector<double>& strains,
                      const std::vector<EmitterDataset>& datasets,
                      std::string* diagnostic = nullptr);

}  // namespace pl6::bayes
