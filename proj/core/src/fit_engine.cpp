#include "pl6/fit/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pl6/errors.hpp"

namespace pl6::fit {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Eigen::VectorXd std_to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double checked_cost(const Eigen::VectorXd& r) {
  const double c = r.squaredNorm();
  return std::isfinite(c) ? c : inf;
}

Eigen::VectorXd clamp(const Eigen::VectorXd& p, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi) {
  return p.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

double FitResult::parameter(const std::string& name) const {
  for (std::size_t k = 0; k < param_names.size(); ++k)
    if (param_names[k] == name) return estimates(static_cast<Eigen::Index>(k));
  throw input_error("fit has no parameter named '" + name + "'");
}

double FitResult::uncertainty(const std::string& name) const {
  if (uncertainties.size() == 0)
    throw input_error("uncertainties unavailable (fit did not converge)");
  for (std::size_t k = 0; k < param_names.size(); ++k)
    if (param_names[k] == name) return uncertainties(static_cast<Eigen::Index>(k));
  throw input_error("fit has no parameter named '" + name + "'");
}

bool FitResult::has_flag(const std::string& prefix) const {
  for (const auto& f : flags)
    if (f.rfind(prefix, 0) == 0) return true;
  return false;
}

Eigen::MatrixXd finite_difference_jacobian(const FitModel& model,
                                           const Eigen::VectorXd& params,
                                           const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size(), p = params.size();
  Eigen::MatrixXd j(n, p);
  Eigen::VectorXd work = params;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double h = 1e-6 * std::max(std::abs(params(k)), 1.0);
    work(k) = params(k) + h;
    const Eigen::VectorXd fp = model.eval(work, x);
    work(k) = params(k) - h;
    const Eigen::VectorXd fm = model.eval(work, x);
    work(k) = params(k);
    j.col(k) = (fp - fm) / (2.0 * h);
  }
  return j;
}

FitResult nlls_fit(const FitModel& model, const Spectrum& data,
                   const Eigen::VectorXd& init, const Eigen::VectorXd& lower,
                   const Eigen::VectorXd& upper, const FitOptions& options) {
  data.require_valid();
  if (!model.eval) throw input_error("fit model has no eval function");
  const Eigen::Index p = init.size();
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  if (p == 0) throw input_error("no parameters to fit");
  if (static_cast<Eigen::Index>(model.param_names.size()) != p)
    throw input_error("parameter name list does not match the init vector");
  if (n <= p) throw input_error("need more data points than parameters");
  if (lower.size() != p || upper.size() != p)
    throw input_error("bound vectors do not match the parameter count");
  if (!init.allFinite()) throw input_error("initial parameters must be finite");
  for (Eigen::Index k = 0; k < p; ++k)
    if (!(lower(k) <= init(k) && init(k) <= upper(k)))
      throw input_error("initial value of '" + model.param_names[k] +
                        "' lies outside its bounds");

  const Eigen::VectorXd x = std_to_eigen(data.x);
  const Eigen::VectorXd y = std_to_eigen(data.y);
  const Eigen::VectorXd w =
      std_to_eigen(data.sigma).cwiseInverse();  // sigma > 0 guaranteed

  auto residual = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
    Eigen::VectorXd f = model.eval(theta, x);
    if (f.size() != n) throw numerical_error("model eval returned a wrong-sized vector");
    return (y - f).cwiseProduct(w);
  };
  auto weighted_jacobian = [&](const Eigen::VectorXd& theta) -> Eigen::MatrixXd {
    Eigen::MatrixXd j =
        model.jacobian ? model.jacobian(theta, x) : finite_difference_jacobian(model, theta, x);
    if (j.rows() != n || j.cols() != p)
      throw numerical_error("model jacobian has the wrong shape");
    return w.asDiagonal() * j;
  };

  FitResult out;
  out.model = model.name;
  out.param_names = model.param_names;

  Eigen::VectorXd theta = init;
  Eigen::VectorXd r = residual(theta);
  double cost = checked_cost(r);
  if (!std::isfinite(cost))
    throw input_error("model is non-finite at the initial parameters");

  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jw = weighted_jacobian(theta);
    if (!jw.allFinite())
      throw numerical_error("jacobian is non-finite at iteration " + std::to_string(iter));
    const Eigen::VectorXd g = jw.transpose() * r;
    Eigen::VectorXd gp = g;  // projected gradient: bound-blocked directions drop out
    for (Eigen::Index k = 0; k < p; ++k) {
      if (theta(k) <= lower(k) && gp(k) < 0.0) gp(k) = 0.0;
      if (theta(k) >= upper(k) && gp(k) > 0.0) gp(k) = 0.0;
    }
    if (gp.lpNorm<Eigen::Infinity>() < options.grad_tol) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd a = jw.transpose() * jw;
    Eigen::VectorXd d = a.diagonal();
    for (Eigen::Index k = 0; k < p; ++k)
      if (d(k) <= 0.0) d(k) = 1.0;  // flat direction; damping still regularizes

    bool accepted = false;
    while (lambda <= 1e12) {
      Eigen::MatrixXd m = a;
      m.diagonal() += lambda * d;
      const Eigen::VectorXd step = m.ldlt().solve(g);
      if (!step.allFinite()) {
        const double dmax = d.maxCoeff(), dmin = d.minCoeff();
        throw numerical_error(
            "singular normal equations (weighted J^T J diagonal spans " +
            std::to_string(dmin) + " .. " + std::to_string(dmax) + ")");
      }
      const Eigen::VectorXd trial = clamp(theta + step, lower, upper);
      const Eigen::VectorXd r_trial = residual(trial);
      const double cost_trial = checked_cost(r_trial);
      if (cost_trial < cost) {
        const double drop = cost - cost_trial;
        theta = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop < options.cost_tol * std::max(cost, 1e-300)) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // damping exhausted: no step in the trust region improves the cost, so
      // the achievable relative cost change is below any tolerance
      converged = true;
    }
    if (converged) {
      ++iter;
      break;
    }
  }

  out.estimates = theta;
  out.chi2 = cost;
  out.reduced_chi2 = cost / static_cast<double>(n - p);
  out.converged = converged;
  out.iterations = iter;
  if (!converged) return out;  // partial state, no uncertainties

  // covariance from the weighted Jacobian at the optimum; unconstrained
  // directions are capped rather than inverted through zero
  const Eigen::MatrixXd jw = weighted_jacobian(theta);
  const Eigen::MatrixXd a = jw.transpose() * jw;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw numerical_error("covariance eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  if (!(emax > 0.0))
    throw numerical_error("singular normal equations at the optimum (J^T J is zero)");
  const double floor_ev = emax * 1e-12;
  Eigen::VectorXd inv_ev(p);
  bool capped = false;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (ev(k) < floor_ev) {
      inv_ev(k) = 1.0 / floor_ev;
      capped = true;
    } else {
      inv_ev(k) = 1.0 / ev(k);
    }
  }
  if (capped)
    out.flags.push_back("ill_conditioned_covariance: condition > 1e12, sigmas capped");
  out.covariance =
      es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  out.uncertainties = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

FitResult nlls_fit(const FitModel& model, const Spectrum& data,
                   const Eigen::VectorXd& init, const FitOptions& options) {
  const Eigen::Index p = init.size();
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(p, -inf);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(p, inf);
  return nlls_fit(model, data, init, lo, hi, options);
}

}  // namespace pl6::fit
