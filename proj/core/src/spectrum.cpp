#include "pl6/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pl6/errors.hpp"

namespace pl6 {

void Spectrum::require_valid() const {
  const std::size_t n = x.size();
  if (n == 0) throw input_error("spectrum is empty");
  if (y.size() != n || sigma.size() != n)
    throw input_error("spectrum column lengths do not match");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k]) || !std::isfinite(sigma[k]))
      throw input_error("spectrum point " + std::to_string(k) + " is non-finite");
    if (!(sigma[k] > 0.0))
      throw input_error("spectrum point " + std::to_string(k) +
                        " has non-positive sigma");
    if (k > 0 && !(x[k] > x[k - 1]))
      throw input_error("spectrum x values must be strictly increasing (point " +
                        std::to_string(k) + ")");
  }
}

Spectrum Spectrum::make(std::vector<double> x, std::vector<double> y,
                        std::vector<double> sigma, std::string x_unit,
                        std::string y_unit) {
  if (x.size() != y.size()) throw input_error("x and y lengths differ");
  if (sigma.empty()) sigma.assign(x.size(), 1.0);
  if (sigma.size() != x.size()) throw input_error("sigma length differs from x");

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  Spectrum s;
  s.x.reserve(x.size());
  s.y.reserve(x.size());
  s.sigma.reserve(x.size());
  for (std::size_t k : order) {
    s.x.push_back(x[k]);
    s.y.push_back(y[k]);
    s.sigma.push_back(sigma[k]);
  }
  s.x_unit = std::move(x_unit);
  s.y_unit = std::move(y_unit);
  s.require_valid();
  return s;
}

}  // namespace pl6
