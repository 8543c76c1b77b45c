#pragma once

// Levenberg-Marquardt nonlinear least squares on weighted residuals
// (y - f)/sigma. Deterministic, bound-constrained by clamping, covariance
// from the weighted Jacobian at the optimum.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pl6/spectrum.hpp"

namespace pl6::fit {

/// Vectorized parametric curve: eval(params, x) returns y for every x.
/// jacobian (optional) returns the n_points x n_params derivative matrix;
/// when absent the engine uses central finite differences.
struct FitModel {
  std::string name;
  std::vector<std::string> param_names;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> eval;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> jacobian;
};

struct FitOptions {
  int max_iterations = 10000;
  double cost_tol = 1e-10;  ///< relative cost decrease per accepted step
  double grad_tol = 1e-8;   ///< infinity norm of the cost gradient
};

struct FitResult {
  std::string model;
  std::vector<std::string> param_names;
  Eigen::VectorXd estimates;
  Eigen::VectorXd uncertainties;  ///< 1-sigma; empty unless converged
  Eigen::MatrixXd covariance;     ///< empty unless converged
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> flags;  ///< model-specific warnings

  double parameter(const std::string& name) const;
  double uncertainty(const std::string& name) const;
  bool has_flag(const std::string& prefix) const;
};

/// Central finite-difference Jacobian of model.eval, used as fallback and as
/// the reference in Jacobian correctness tests.
Eigen::MatrixXd finite_difference_jacobian(const FitModel& model,
                                           const Eigen::VectorXd& params,
                                           const Eigen::VectorXd& x);

/// Box-constrained LM descent. init must lie inside [lower, upper] and data
/// must have more points than parameters. Non-convergence within
/// max_iterations returns the partial state with converged = false and no
/// uncertainties; a singular normal system throws numerical_error with a
/// condition diagnostic.
FitResult nlls_fit(const FitModel& model, const Spectrum& data,
                   const Eigen::VectorXd& init, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, const FitOptions& options = {});

/// Unbounded convenience overload.
FitResult nlls_fit(const FitModel& model, const Spectrum& data,
                   const Eigen::VectorXd& init, const FitOptions& options = {});

}  // namespace pl6::fit
