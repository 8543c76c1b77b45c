#include "pl6/fit/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "pl6/errors.hpp"

namespace pl6::fit {

namespace {

constexpr double pi = 3.14159265358979323846264338328;
constexpr double inf = std::numeric_limits<double>::infinity();

// nuclear gyromagnetic ratios, MHz/T (magnitudes)
constexpr double gamma_si_mhz_per_t = 8.458;
constexpr double gamma_c_mhz_per_t = 10.705;

Eigen::VectorXd vec_of(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

std::vector<double> median3(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> out(y);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    double a = y[k - 1], b = y[k], c = y[k + 1];
    out[k] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

// reorder parameters (and covariance, if present) of a finished fit
void permute_result(FitResult& r, const std::vector<Eigen::Index>& perm) {
  const Eigen::Index p = r.estimates.size();
  Eigen::VectorXd est(p);
  for (Eigen::Index k = 0; k < p; ++k) est(k) = r.estimates(perm[k]);
  r.estimates = est;
  if (r.uncertainties.size() == p) {
    Eigen::VectorXd unc(p);
    for (Eigen::Index k = 0; k < p; ++k) unc(k) = r.uncertainties(perm[k]);
    r.uncertainties = unc;
  }
  if (r.covariance.rows() == p) {
    Eigen::MatrixXd cov(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) cov(i, j) = r.covariance(perm[i], perm[j]);
    r.covariance = cov;
  }
}

double span_of(const std::vector<double>& x) { return x.back() - x.front(); }

// weighted straight-line fit, returns (intercept, slope) with covariance
struct LineFit {
  double intercept = 0, slope = 0;
  double var_intercept = 0, var_slope = 0, cov = 0;
  double chi2 = 0;
};

LineFit weighted_line(const std::vector<double>& u, const std::vector<double>& z,
                      const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    sw += w[k];
    sx += w[k] * u[k];
    sy += w[k] * z[k];
    sxx += w[k] * u[k] * u[k];
    sxy += w[k] * u[k] * z[k];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0))
    throw numerical_error("degenerate abscissa in weighted line fit");
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.var_slope = sw / det;
  f.var_intercept = sxx / det;
  f.cov = -sx / det;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double resid = z[k] - f.intercept - f.slope * u[k];
    f.chi2 += w[k] * resid * resid;
  }
  return f;
}

}  // namespace

// -- parametric models -------------------------------------------------------

FitModel lorentzian_multiplet_model(int n_peaks) {
  if (n_peaks < 1) throw input_error("need at least one peak");
  FitModel m;
  m.name = "lorentzian_multiplet";
  for (int k = 1; k <= n_peaks; ++k) {
    m.param_names.push_back("center_" + std::to_string(k));
    m.param_names.push_back("fwhm_" + std::to_string(k));
    m.param_names.push_back("amp_" + std::to_string(k));
  }
  m.param_names.push_back("baseline");
  const int np = n_peaks;
  m.eval = [np](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd y = Eigen::VectorXd::Constant(x.size(), p(3 * np));
    for (int k = 0; k < np; ++k) {
      const double c = p(3 * k), w = p(3 * k + 1), a = p(3 * k + 2);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double u = 2.0 * (x(i) - c) / w;
        y(i) += a / (1.0 + u * u);
      }
    }
    return y;
  };
  m.jacobian = [np](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 3 * np + 1);
    for (int k = 0; k < np; ++k) {
      const double c = p(3 * k), w = p(3 * k + 1), a = p(3 * k + 2);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double d = x(i) - c;
        const double u = 2.0 * d / w;
        const double den = 1.0 + u * u;
        const double den2 = den * den;
        j(i, 3 * k) = a * 8.0 * d / (w * w) / den2;
        j(i, 3 * k + 1) = a * 8.0 * d * d / (w * w * w) / den2;
        j(i, 3 * k + 2) = 1.0 / den;
      }
    }
    j.col(3 * np).setOnes();
    return j;
  };
  return m;
}

FitModel power_broadening_model() {
  FitModel m;
  m.name = "power_broadening";
  m.param_names = {"gamma0", "p_sat"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    return (p(0) * (1.0 + x.array() / p(1)).sqrt()).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 2);
    const auto root = (1.0 + x.array() / p(1)).sqrt();
    j.col(0) = root.matrix();
    j.col(1) = (-p(0) * x.array() / (p(1) * p(1)) / (2.0 * root)).matrix();
    return j;
  };
  return m;
}

FitModel biexponential_model() {
  FitModel m;
  m.name = "biexponential";
  m.param_names = {"a_fast", "tau_fast", "a_slow", "tau_slow", "offset"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    const auto ef = (-x.array() / p(1)).exp();
    const auto es = (-x.array() / p(3)).exp();
    return (p(0) * ef + p(2) * es + p(4)).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 5);
    const auto ef = (-x.array() / p(1)).exp();
    const auto es = (-x.array() / p(3)).exp();
    j.col(0) = ef.matrix();
    j.col(1) = (p(0) * ef * x.array() / (p(1) * p(1))).matrix();
    j.col(2) = es.matrix();
    j.col(3) = (p(2) * es * x.array() / (p(3) * p(3))).matrix();
    j.col(4).setOnes();
    return j;
  };
  return m;
}

FitModel damped_cosine_model() {
  FitModel m;
  m.name = "damped_cosine";
  m.param_names = {"amp", "tau", "omega", "phase", "offset"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    const auto env = (-x.array() / p(1)).exp();
    const auto arg = 2.0 * pi * p(2) * x.array() + p(3);
    return (p(0) * env * arg.cos() + p(4)).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 5);
    const auto env = (-x.array() / p(1)).exp();
    const auto arg = 2.0 * pi * p(2) * x.array() + p(3);
    const auto c = arg.cos();
    const auto s = arg.sin();
    j.col(0) = (env * c).matrix();
    j.col(1) = (p(0) * env * c * x.array() / (p(1) * p(1))).matrix();
    j.col(2) = (-p(0) * env * s * 2.0 * pi * x.array()).matrix();
    j.col(3) = (-p(0) * env * s).matrix();
    j.col(4).setOnes();
    return j;
  };
  return m;
}

FitModel eseem_model() {
  FitModel m;
  m.name = "eseem";
  m.param_names = {"amp", "t2_ms", "k1", "k2", "nu_si_khz", "nu_c_khz", "offset"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double s1 = std::sin(pi * p(4) * x(i));
      const double s2 = std::sin(pi * p(5) * x(i));
      y(i) = p(0) * std::exp(-x(i) / p(1)) * (1.0 - p(2) * s1 * s1) *
                 (1.0 - p(3) * s2 * s2) +
             p(6);
    }
    return y;
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 7);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double tau = x(i);
      const double e = std::exp(-tau / p(1));
      const double s1 = std::sin(pi * p(4) * tau), c1 = std::cos(pi * p(4) * tau);
      const double s2 = std::sin(pi * p(5) * tau), c2 = std::cos(pi * p(5) * tau);
      const double m1 = 1.0 - p(2) * s1 * s1;
      const double m2 = 1.0 - p(3) * s2 * s2;
      j(i, 0) = e * m1 * m2;
      j(i, 1) = p(0) * e * m1 * m2 * tau / (p(1) * p(1));
      j(i, 2) = -p(0) * e * s1 * s1 * m2;
      j(i, 3) = -p(0) * e * m1 * s2 * s2;
      j(i, 4) = -p(0) * e * m2 * p(2) * 2.0 * s1 * c1 * pi * tau;
      j(i, 5) = -p(0) * e * m1 * p(3) * 2.0 * s2 * c2 * pi * tau;
      j(i, 6) = 1.0;
    }
    return j;
  };
  return m;
}

FitModel stretched_exponential_model() {
  FitModel m;
  m.name = "stretched_exponential";
  m.param_names = {"amp", "t2", "n"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = x(i) / p(1);
      y(i) = p(0) * std::exp(-(u > 0.0 ? std::pow(u, p(2)) : 0.0));
    }
    return y;
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = x(i) / p(1);
      const double z = u > 0.0 ? std::pow(u, p(2)) : 0.0;
      const double e = std::exp(-z);
      j(i, 0) = e;
      j(i, 1) = p(0) * e * p(2) * z / p(1);
      j(i, 2) = u > 0.0 ? -p(0) * e * z * std::log(u) : 0.0;
    }
    return j;
  };
  return m;
}

FitModel power_law_model() {
  FitModel m;
  m.name = "power_law";
  m.param_names = {"alpha", "beta"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    return (p(0) * x.array().pow(p(1))).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 2);
    const auto xb = x.array().pow(p(1));
    j.col(0) = xb.matrix();
    j.col(1) = (p(0) * xb * x.array().log()).matrix();
    return j;
  };
  return m;
}

FitModel visibility_model() {
  FitModel m;
  m.name = "visibility";
  m.param_names = {"mean", "visibility", "theta0_deg"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    const auto arg = (2.0 * x.array() - p(2)) * pi / 180.0;
    return (p(0) * (1.0 + p(1) * arg.cos())).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 3);
    const auto arg = (2.0 * x.array() - p(2)) * pi / 180.0;
    j.col(0) = (1.0 + p(1) * arg.cos()).matrix();
    j.col(1) = (p(0) * arg.cos()).matrix();
    j.col(2) = (p(0) * p(1) * arg.sin() * pi / 180.0).matrix();
    return j;
  };
  return m;
}

FitModel saturation_model() {
  FitModel m;
  m.name = "saturation";
  m.param_names = {"r_max", "p_sat"};
  m.eval = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    return (p(0) * x.array() / (x.array() + p(1))).matrix();
  };
  m.jacobian = [](const Eigen::VectorXd& p, const Eigen::VectorXd& x) {
    Eigen::MatrixXd j(x.size(), 2);
    const auto den = x.array() + p(1);
    j.col(0) = (x.array() / den).matrix();
    j.col(1) = (-p(0) * x.array() / (den * den)).matrix();
    return j;
  };
  return m;
}

// -- spectral peak scan ------------------------------------------------------

SpectralPeak scan_dominant_frequency(const std::vector<double>& t,
                                     const std::vector<double>& y) {
  if (t.size() < 8 || t.size() != y.size())
    throw input_error("need at least 8 samples for a frequency scan");
  const std::size_t n = t.size();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  double dt_min = inf;
  for (std::size_t k = 1; k < n; ++k) dt_min = std::min(dt_min, t[k] - t[k - 1]);
  const double span = t.back() - t.front();
  if (!(dt_min > 0.0) || !(span > 0.0)) throw input_error("degenerate time grid");
  const double f_nyq = 0.5 / dt_min;
  const double f_min = 0.5 / span;  // below this a "peak" is just the envelope

  const int nf = static_cast<int>(4 * n);
  SpectralPeak best{0.0, -1.0, 0.0, 0.0};
  std::vector<double> power(nf);
  for (int q = 0; q < nf; ++q) {
    const double f = f_nyq * (q + 1) / nf;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = -2.0 * pi * f * t[k];
      acc += (y[k] - mean) * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    power[q] = std::norm(acc);
    if (f >= f_min && power[q] > best.power) {
      best.frequency = f;
      best.power = power[q];
      best.phase = std::arg(acc);
    }
  }
  std::vector<double> sorted_power(power);
  std::nth_element(sorted_power.begin(), sorted_power.begin() + nf / 2,
                   sorted_power.end());
  best.median_power = sorted_power[nf / 2];
  return best;
}

// -- high-level fits ---------------------------------------------------------

FitResult fit_lorentzian_multiplet(const Spectrum& data, int n_peaks) {
  data.require_valid();
  if (n_peaks < 1) throw input_error("n_peaks must be at least 1");
  const std::size_t n = data.size();
  const auto ys = median3(data.y);

  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (ys[k] > ys[k - 1] && ys[k] >= ys[k + 1]) maxima.push_back(k);
  if (static_cast<int>(maxima.size()) < n_peaks)
    throw input_error("found " + std::to_string(maxima.size()) +
                      " local maxima but n_peaks = " + std::to_string(n_peaks) +
                      "; smooth the data or lower n_peaks");
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
  maxima.resize(static_cast<std::size_t>(n_peaks));
  std::sort(maxima.begin(), maxima.end());

  const double base0 = *std::min_element(ys.begin(), ys.end());
  const double span = span_of(data.x);
  const double dx = span / static_cast<double>(n - 1);
  const double w0 = std::max(span / (8.0 * n_peaks), 2.0 * dx);

  Eigen::VectorXd init(3 * n_peaks + 1), lo(3 * n_peaks + 1), hi(3 * n_peaks + 1);
  for (int k = 0; k < n_peaks; ++k) {
    init(3 * k) = data.x[maxima[static_cast<std::size_t>(k)]];
    init(3 * k + 1) = w0;
    init(3 * k + 2) = std::max(ys[maxima[static_cast<std::size_t>(k)]] - base0, 1e-12);
    lo(3 * k) = data.x.front() - 0.1 * span;
    hi(3 * k) = data.x.back() + 0.1 * span;
    lo(3 * k + 1) = 1e-6 * span;
    hi(3 * k + 1) = 2.0 * span;
    lo(3 * k + 2) = 0.0;
    hi(3 * k + 2) = inf;
  }
  init(3 * n_peaks) = base0;
  lo(3 * n_peaks) = -inf;
  hi(3 * n_peaks) = inf;

  FitResult r = nlls_fit(lorentzian_multiplet_model(n_peaks), data, init, lo, hi);

  // report peaks sorted by center
  std::vector<int> order(static_cast<std::size_t>(n_peaks));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return r.estimates(3 * a) < r.estimates(3 * b);
  });
  std::vector<Eigen::Index> perm;
  for (int k : order)
    for (int f = 0; f < 3; ++f) perm.push_back(3 * k + f);
  perm.push_back(3 * n_peaks);
  permute_result(r, perm);
  return r;
}

FitResult fit_power_broadening(const Spectrum& data) {
  data.require_valid();
  if (data.size() < 3) throw input_error("need at least 3 power points");
  const double g0 = std::max(data.y.front(), 1e-12);
  const double ratio = std::max(data.y.back() / g0, 1.01);
  const double ps0 = std::max(data.x.back() / std::max(ratio * ratio - 1.0, 0.1), 1e-12);

  FitResult r = nlls_fit(power_broadening_model(), data, vec_of({g0, ps0}),
                         vec_of({1e-12, 1e-12}), vec_of({inf, inf}));
  const double ymin = *std::min_element(data.y.begin(), data.y.end());
  if (r.converged && r.estimates(0) > ymin)
    r.flags.push_back("gamma0_above_minimum: fitted intercept exceeds smallest linewidth");
  return r;
}

FitResult fit_biexponential(const Spectrum& data) {
  data.require_valid();
  if (data.size() < 6) throw input_error("need more than 5 points for a biexponential");
  const std::size_t n = data.size();
  const double span = span_of(data.x);
  const double c0 = *std::min_element(data.y.begin(), data.y.end());

  // Tail regression for the slow component. Weight log-points by v^2
  // (inverse variance of log(v) under additive noise), so samples sitting on
  // the floor estimate cannot drag the slope; with an exact-min floor the
  // last samples have log(v) -> -inf and would dominate an unweighted line.
  auto log_line = [&](std::size_t from, std::size_t to, double floor_val) -> LineFit {
    std::vector<double> u, z, w;
    for (std::size_t k = from; k < to; ++k) {
      const double v = data.y[k] - floor_val;
      if (v > 1e-12) {
        u.push_back(data.x[k]);
        z.push_back(std::log(v));
        w.push_back(v * v);
      }
    }
    if (u.size() < 2) throw numerical_error("too few usable points");
    return weighted_line(u, z, w);
  };

  double tau_s = span / 3.0, b0 = 0.0;
  try {
    const LineFit tail = log_line(2 * n / 3, n, c0 * (1.0 - 1e-9) - 1e-15);
    if (tail.slope < -1e-12) {
      tau_s = -1.0 / tail.slope;
      b0 = std::exp(tail.intercept);
    }
  } catch (const numerical_error&) {
  }
  double tau_f = tau_s / 10.0, a0 = 0.0;
  {
    std::vector<double> u, z, w;
    for (std::size_t k = 0; k < n / 3; ++k) {
      const double v = data.y[k] - c0 - b0 * std::exp(-data.x[k] / tau_s);
      if (v > 1e-12) {
        u.push_back(data.x[k]);
        z.push_back(std::log(v));
        w.push_back(v * v);  // same inverse-variance weighting as the tail
      }
    }
    if (u.size() >= 2) {
      const LineFit head = weighted_line(u, z, w);
      if (head.slope < -1e-12) {
        tau_f = -1.0 / head.slope;
        a0 = std::exp(head.intercept);
      }
    }
  }
  if (a0 <= 0.0) a0 = std::max(data.y.front() - c0 - b0, 1e-6);
  if (b0 <= 0.0) b0 = 1e-6;
  if (!(tau_f < tau_s)) tau_f = tau_s / 3.0;

  FitResult r = nlls_fit(biexponential_model(), data,
                         vec_of({a0, tau_f, b0, tau_s, c0}),
                         vec_of({0.0, 1e-9 * span, 0.0, 1e-9 * span, -inf}),
                         vec_of({inf, inf, inf, inf, inf}));

  if (r.estimates(1) > r.estimates(3))
    permute_result(r, {2, 3, 0, 1, 4});  // enforce tau_fast < tau_slow
  const double tf = r.estimates(1), ts = r.estimates(3);
  if (ts / tf < 1.05)
    r.flags.push_back("degenerate_time_constants: tau ratio below 1.05");
  return r;
}

Fidelity fidelity_from_biexp(const FitResult& biexp_fit) {
  if (biexp_fit.model != "biexponential")
    throw input_error("fidelity needs a biexponential fit result");
  if (!biexp_fit.converged) throw input_error("fidelity needs a converged fit");
  const double a = biexp_fit.estimates(0), b = biexp_fit.estimates(2);
  if (a < 0.0 || b < 0.0) throw input_error("fidelity needs nonnegative amplitudes");
  const double sum = a + b;
  if (!(sum > 0.0)) throw input_error("fidelity undefined for zero total amplitude");

  Fidelity f;
  f.value = a / sum;
  if (biexp_fit.covariance.rows() == 5) {
    const double da = b / (sum * sum), db = -a / (sum * sum);
    f.sigma = std::sqrt(std::max(
        da * da * biexp_fit.covariance(0, 0) + db * db * biexp_fit.covariance(2, 2) +
            2.0 * da * db * biexp_fit.covariance(0, 2),
        0.0));
  }
  return f;
}

FitResult fit_damped_cosine(const Spectrum& data) {
  data.require_valid();
  const SpectralPeak peak = scan_dominant_frequency(data.x, data.y);
  if (peak.power < 4.0 * peak.median_power)
    throw input_error("no oscillation detected (periodogram peak below 4x median)");

  const std::size_t n = data.size();
  const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) /
                      static_cast<double>(n);

  // A monotone transient can beat the periodogram gate through the spectral
  // leakage of its low-frequency lobe, but it crosses its own mean only once;
  // a real oscillation crosses it once per half period.
  int crossings = 0;
  for (std::size_t k = 1; k < n; ++k)
    if ((data.y[k] - mean) * (data.y[k - 1] - mean) < 0.0) ++crossings;
  if (crossings < 3)
    throw input_error("no oscillation detected (fewer than 3 mean crossings)");
  const double span = span_of(data.x);
  const double amp0 = 2.0 * std::sqrt(peak.power) / static_cast<double>(n);
  double dt_min = inf;
  for (std::size_t k = 1; k < n; ++k) dt_min = std::min(dt_min, data.x[k] - data.x[k - 1]);

  const Eigen::VectorXd init = vec_of({amp0, 0.5 * span, peak.frequency, peak.phase, mean});
  const Eigen::VectorXd lo =
      vec_of({-inf, 1e-6 * span, 1e-12, -2.0 * pi, -inf});
  const Eigen::VectorXd hi =
      vec_of({inf, 1e6 * span, 1.0 / dt_min, 2.0 * pi, inf});
  return nlls_fit(damped_cosine_model(), data, init, lo, hi);
}

double damped_cosine_contrast(const FitResult& damped_cosine_fit) {
  if (damped_cosine_fit.model != "damped_cosine")
    throw input_error("contrast needs a damped-cosine fit result");
  if (!damped_cosine_fit.converged) throw input_error("contrast needs a converged fit");
  const double a = std::abs(damped_cosine_fit.estimates(0));
  const double c = damped_cosine_fit.estimates(4);
  if (!(c + a > 0.0)) throw input_error("contrast undefined for non-positive envelope");
  return (2.0 * a) / (2.0 * c);
}

FitResult fit_eseem(const Spectrum& echo_decay, double b_field_mt) {
  echo_decay.require_valid();
  if (!(b_field_mt > 0.0)) throw input_error("field must be positive");
  const std::size_t n = echo_decay.size();
  if (n < 10) throw input_error("need at least 10 echo points");

  // MHz/T at half the applied field, written in kHz with tau in ms
  const double nu_si0 = gamma_si_mhz_per_t * 1e3 * (b_field_mt * 1e-3) / 2.0;
  const double nu_c0 = gamma_c_mhz_per_t * 1e3 * (b_field_mt * 1e-3) / 2.0;
  const double span = span_of(echo_decay.x);
  if (span * nu_si0 < 2.0)
    throw input_error("tau grid spans fewer than 2 modulation periods");

  const double offset0 = *std::min_element(echo_decay.y.begin(), echo_decay.y.end());
  const double amp0 = std::max(echo_decay.y.front() - offset0, 1e-12);

  const Eigen::VectorXd init =
      vec_of({amp0, 0.5 * span, 0.5, 0.5, nu_si0, nu_c0, offset0});
  const Eigen::VectorXd lo = vec_of(
      {0.0, 1e-6 * span, 0.0, 0.0, 0.25 * nu_si0, 0.25 * nu_c0, -inf});
  const Eigen::VectorXd hi =
      vec_of({inf, 1e3 * span, 1.0, 1.0, 4.0 * nu_si0, 4.0 * nu_c0, inf});
  FitResult r = nlls_fit(eseem_model(), echo_decay, init, lo, hi);

  if (r.converged && std::abs(r.estimates(4) - r.estimates(5)) < 1.0 / span)
    r.flags.push_back("frequency_collision: nu_si and nu_c agree within grid resolution");
  return r;
}

FitResult fit_stretched_exponential(const Spectrum& decay) {
  decay.require_valid();
  if (decay.size() < 5) throw input_error("need at least 5 decay points");
  const double peak = *std::max_element(decay.y.begin(), decay.y.end());
  const double low = *std::min_element(decay.y.begin(), decay.y.end());
  if (!(peak > 0.0) || decay.y.front() < 0.9 * peak || low > 0.2 * peak)
    throw input_error(
        "insufficient decay range: need data from 0.9x down to 0.2x of the amplitude");

  const double span = span_of(decay.x);
  double t2_0 = 0.5 * span;
  const double target = peak / std::exp(1.0);
  for (std::size_t k = 1; k < decay.size(); ++k) {
    if (decay.y[k] <= target) {
      t2_0 = decay.x[k];
      break;
    }
  }

  const Eigen::VectorXd init = vec_of({peak, t2_0, 1.5});
  const Eigen::VectorXd lo = vec_of({1e-12, 1e-6 * span, 0.5 + 1e-9});
  const Eigen::VectorXd hi = vec_of({inf, 1e3 * span, 4.0 - 1e-9});
  return nlls_fit(stretched_exponential_model(), decay, init, lo, hi);
}

FitResult fit_power_law(const Spectrum& t2_vs_n) {
  t2_vs_n.require_valid();
  const std::size_t n = t2_vs_n.size();
  std::vector<double> u(n), z(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(t2_vs_n.x[k] > 0.0) || !(t2_vs_n.y[k] > 0.0))
      throw input_error("power-law fit needs positive N and T2 (point " +
                        std::to_string(k) + ")");
    u[k] = std::log(t2_vs_n.x[k]);
    z[k] = std::log(t2_vs_n.y[k]);
    const double s_log = t2_vs_n.sigma[k] / t2_vs_n.y[k];
    w[k] = 1.0 / (s_log * s_log);
  }
  std::vector<double> distinct(t2_vs_n.x);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw input_error("need at least 3 distinct N values");

  const LineFit line = weighted_line(u, z, w);

  FitResult r;
  r.model = "power_law";
  r.param_names = {"alpha", "beta"};
  const double alpha = std::exp(line.intercept);
  r.estimates = vec_of({alpha, line.slope});
  r.covariance.resize(2, 2);
  // delta method through alpha = exp(intercept)
  r.covariance(0, 0) = alpha * alpha * line.var_intercept;
  r.covariance(0, 1) = r.covariance(1, 0) = alpha * line.cov;
  r.covariance(1, 1) = line.var_slope;
  r.uncertainties = r.covariance.diagonal().cwiseSqrt();
  r.chi2 = line.chi2;
  r.reduced_chi2 = line.chi2 / static_cast<double>(n - 2);
  r.converged = true;
  r.iterations = 1;
  if (!(line.slope > 0.0 && line.slope < 1.5))
    r.flags.push_back("beta_out_of_range: exponent outside (0, 1.5)");
  return r;
}

FitResult fit_visibility(const Spectrum& counts_vs_qwp) {
  counts_vs_qwp.require_valid();
  if (span_of(counts_vs_qwp.x) < 180.0)
    throw input_error("QWP scan must span at least 180 degrees");
  const std::size_t n = counts_vs_qwp.size();
  const double mean = std::accumulate(counts_vs_qwp.y.begin(), counts_vs_qwp.y.end(), 0.0) /
                      static_cast<double>(n);
  if (!(mean > 0.0)) throw input_error("count data must have a positive mean");

  double cc = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double arg = 2.0 * counts_vs_qwp.x[k] * pi / 180.0;
    cc += (counts_vs_qwp.y[k] - mean) * std::cos(arg);
    ss += (counts_vs_qwp.y[k] - mean) * std::sin(arg);
  }
  const double v0 =
      std::min(2.0 * std::sqrt(cc * cc + ss * ss) / (static_cast<double>(n) * mean), 1.2);
  const double theta0 = std::atan2(ss, cc) * 180.0 / pi;

  const Eigen::VectorXd init = vec_of({mean, std::max(v0, 1e-6), theta0});
  const Eigen::VectorXd lo = vec_of({1e-12, -0.5, -720.0});
  const Eigen::VectorXd hi = vec_of({inf, 1.5, 720.0});
  FitResult r = nlls_fit(visibility_model(), counts_vs_qwp, init, lo, hi);
  if (r.converged && (r.estimates(1) < 0.0 || r.estimates(1) > 1.0))
    r.flags.push_back("visibility_out_of_range: fitted V outside [0, 1]");
  return r;
}

FitResult fit_saturation(const Spectrum& rate_vs_power) {
  rate_vs_power.require_valid();
  if (rate_vs_power.size() < 3) throw input_error("need at least 3 power points");
  const double ymax = *std::max_element(rate_vs_power.y.begin(), rate_vs_power.y.end());
  if (!(ymax > 0.0)) throw input_error("saturation fit needs positive rates");
  double ps0 = rate_vs_power.x.back() / 2.0;
  for (std::size_t k = 0; k < rate_vs_power.size(); ++k) {
    if (rate_vs_power.y[k] >= 0.5 * ymax) {
      ps0 = std::max(rate_vs_power.x[k], 1e-12);
      break;
    }
  }
  return nlls_fit(saturation_model(), rate_vs_power, vec_of({1.15 * ymax, ps0}),
                  vec_of({1e-12, 1e-12}), vec_of({inf, inf}));
}

}  // namespace pl6::fit
