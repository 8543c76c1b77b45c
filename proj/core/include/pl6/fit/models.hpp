#pragma once

// The model zoo: every parametric curve the workbench fits, each with an
// analytic Jacobian, plus the high-level fit entry points with their
// initialization heuristics. Parameter units follow the data units noted per
// model.

#include "pl6/fit/engine.hpp"
#include "pl6/spectrum.hpp"

namespace pl6::fit {

/// Sum of n Lorentzians + constant baseline. Params per peak k (1-based):
/// center_k, fwhm_k, amp_k; then baseline. y = sum amp/(1+4(x-c)^2/w^2) + b.
FitModel lorentzian_multiplet_model(int n_peaks);

/// Gamma(P) = gamma0 * sqrt(1 + P/p_sat). Params: gamma0, p_sat.
FitModel power_broadening_model();

/// y = a_fast*exp(-t/tau_fast) + a_slow*exp(-t/tau_slow) + offset.
FitModel biexponential_model();

/// y = amp*exp(-t/tau)*cos(2*pi*omega*t + phase) + offset; omega in 1/x-unit.
FitModel damped_cosine_model();

/// y = amp*exp(-tau/t2)*(1 - k1*sin^2(pi*nu_si*tau))*(1 - k2*sin^2(pi*nu_c*tau))
/// + offset, tau in ms and frequencies in kHz (their product is unitless).
FitModel eseem_model();

/// y = amp*exp(-(t/t2)^n). Params: amp, t2, n.
FitModel stretched_exponential_model();

/// y = alpha*N^beta (parametric form; fit_power_law uses the closed-form
/// log-log weighted linear solution instead of the LM engine).
FitModel power_law_model();

/// C(theta) = mean*(1 + visibility*cos((2*theta - theta0)*pi/180)), theta in
/// degrees; theta0 carries the 2*theta phase, also in degrees.
FitModel visibility_model();

/// r(P) = r_max*P/(P + p_sat).
FitModel saturation_model();

/// Strongest spectral component of mean-subtracted data on a dense frequency
/// grid (4x oversampled direct DFT, safe on non-uniform time grids). Peaks
/// below 0.5/span are ignored as envelope leakage. median_power supports the
/// "is there an oscillation at all" test used by the cosine fits.
struct SpectralPeak {
  double frequency = 0.0;
  double power = 0.0;
  double phase = 0.0;
  double median_power = 0.0;
};
SpectralPeak scan_dominant_frequency(const std::vector<double>& t,
                                     const std::vector<double>& y);

// -- high-level fits -------------------------------------------------------

/// Multiplet fit seeded from the n largest local maxima after 3-point median
/// smoothing (leftmost wins ties). Centers sorted ascending in the result.
/// Fewer maxima than peaks -> input_error suggesting smoothing.
FitResult fit_lorentzian_multiplet(const Spectrum& data, int n_peaks);

/// Needs >= 3 power points. Flags "gamma0_above_minimum" when the fitted
/// intercept exceeds the smallest measured linewidth.
FitResult fit_power_broadening(const Spectrum& data);

/// tau_fast < tau_slow enforced by ordering; a time-constant ratio below
/// 1.05 is flagged "degenerate_time_constants".
FitResult fit_biexponential(const Spectrum& data);

/// Pumped-population fraction F = a_fast/(a_fast + a_slow) of a converged
/// biexponential fit, with first-order error propagation from the fit
/// covariance. Throws input_error for a_fast + a_slow = 0 or negative
/// amplitudes.
struct Fidelity {
  double value = 0.0;
  double sigma = 0.0;
};
Fidelity fidelity_from_biexp(const FitResult& biexp_fit);

/// Omega seeded from a dense-grid discrete-Fourier periodogram; throws
/// input_error("no oscillation detected") when no peak clears 4x the median
/// periodogram power.
FitResult fit_damped_cosine(const Spectrum& data);

/// Envelope contrast at t = 0: (max - min)/(max + min) with
/// max/min = offset +- |amp|.
double damped_cosine_contrast(const FitResult& damped_cosine_fit);

/// Modulation frequencies seeded from gamma_si = 8.458 and gamma_c = 10.705
/// MHz/T at an effective field of half the applied one; depths start at 0.5
/// in [0, 1]. Flags "frequency_collision" when the fitted nu_si and nu_c
/// agree within the tau-grid resolution.
FitResult fit_eseem(const Spectrum& echo_decay, double b_field_mt);

/// Requires the data to span from >= 0.9*max down to <= 0.2*max, otherwise
/// input_error (identifiability). Exponent bounded to (0.5, 4).
FitResult fit_stretched_exponential(const Spectrum& decay);

/// Closed-form weighted linear fit in log-log space; alpha = exp(intercept),
/// beta = slope. Rejects non-positive N or T2. Flags "beta_out_of_range"
/// outside (0, 1.5).
FitResult fit_power_law(const Spectrum& t2_vs_n);

/// Theta range must span >= 180 degrees. Flags "visibility_out_of_range"
/// when the fitted V falls outside [0, 1].
FitResult fit_visibility(const Spectrum& counts_vs_qwp);

/// Saturation fit for spin-flip rate vs power data.
FitResult fit_saturation(const Spectrum& rate_vs_power);

}  // namespace pl6::fit
