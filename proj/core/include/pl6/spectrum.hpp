#pragma once

// The (x, y, sigma) data carrier shared by the fit engine and the CSV layer.

#include <string>
#include <vector>

namespace pl6 {

struct Spectrum {
  std::vector<double> x;      ///< strictly increasing after make()
  std::vector<double> y;
  std::vector<double> sigma;  ///< > 0; defaulted to 1 when absent
  std::string x_unit;         ///< "GHz", "ns", "ms", "uW", "nW", "deg", ...
  std::string y_unit;
  std::string emitter;        ///< optional metadata
  double laser_power_uw = 0.0;
  double field_mt = 0.0;

  std::size_t size() const { return x.size(); }
  /// Sorted, strictly increasing x, positive sigma, finite values, matching
  /// lengths. Throws input_error naming the offending point.
  void require_valid() const;

  /// Ingestion: sorts points by x, fills sigma with 1 when empty, validates.
  /// Duplicate x values are rejected (strictly increasing contract).
  static Spectrum make(std::vector<double> x, std::vector<double> y,
                       std::vector<double> sigma = {}, std::string x_unit = "",
                       std::string y_unit = "");
};

}  // namespace pl6
