// pl6gen: regenerates the bundled data fixtures. Every file is produced from
// the library's own forward models with a fixed per-file seed, so the corpus
// is reproducible byte for byte; the seeds and generator settings below are
// also written into the fixtures README.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pl6/errors.hpp"
#include "pl6/fine_structure.hpp"
#include "pl6/io/csv.hpp"
#include "pl6/rate_model.hpp"
#include "pl6/rng.hpp"

namespace {

using pl6::io::CsvTable;

std::string fmt(double v) { return pl6::io::format_number(v); }

void write_xy_sigma(const std::string& path, const std::vector<double>& x,
                    const std::vector<double>& y, const std::vector<double>& sigma) {
  CsvTable t;
  t.header = {"x", "y", "sigma"};
  for (std::size_t i = 0; i < x.size(); ++i)
    t.rows.push_back({fmt(x[i]), fmt(y[i]), fmt(sigma[i])});
  pl6::io::write_csv(path, t);
}

// Five-line excitation spectrum of a low-strain emitter: model line offsets
// broadened by fixed-width Lorentzians on a uniform laser-detuning grid,
// Poisson counting noise.
void gen_ple_low_strain(const std::string& dir) {
  const std::uint64_t seed = 101;
  const pl6::FineStructureParams params;
  const auto offsets = pl6::branch_energies_direct(params, {0.688, 0.0});
  const double fwhm = 0.10, amp = 1000.0, baseline = 50.0;
  pl6::Rng rng(seed);
  std::vector<double> x, y, s;
  for (int i = 0; i <= 800; ++i) {
    const double nu = -8.0 + 0.02 * i;
    double mean = baseline;
    for (const double c : offsets) {
      const double u = 2.0 * (nu - c) / fwhm;
      mean += amp / (1.0 + u * u);
    }
    const double counts = static_cast<double>(rng.poisson(mean));
    x.push_back(nu);
    y.push_back(counts);
    s.push_back(std::sqrt(std::max(counts, 1.0)));
  }
  write_xy_sigma(dir + "/ple_low_strain.csv", x, y, s);
}

// Optical linewidth vs laser power following sqrt saturation broadening.
void gen_linewidth_vs_power(const std::string& dir) {
  const std::uint64_t seed = 102;
  const double gamma0 = 0.0625, p_sat = 2.5;  // GHz, uW
  const std::vector<double> powers = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0,
                                      4.0,  8.0, 12.0, 16.0, 20.0, 25.0};
  pl6::Rng rng(seed);
  std::vector<double> y, s;
  for (const double p : powers) {
    const double truth = gamma0 * std::sqrt(1.0 + p / p_sat);
    const double sigma = 0.015 * truth;
    y.push_back(truth + sigma * rng.normal());
    s.push_back(sigma);
  }
  write_xy_sigma(dir + "/linewidth_vs_power.csv", powers, y, s);
}

// Resonant-pumping photoluminescence transient from the five-pool rate
// model, binned into Poisson counts.
void gen_pl_decay(const std::string& dir) {
  const std::uint64_t seed = 103;
  pl6::RateModel model;
  model.pump_per_uw = 0.5 / 60.0;
  model.radiative = 1.0 / 14.0;
  model.isc_ms0 = 0.002;
  model.isc_ms1 = 0.012;
  model.singlet_decay = 1.0 / 300.0;
  model.branch_to_ms0 = 0.99540;
  std::vector<double> t_grid;
  for (int i = 0; i <= 750; ++i) t_grid.push_back(2.0 * i);
  const auto traj = pl6::simulate_pumping_decay(model, 60.0, t_grid);
  const double scale = 2e6;  // counts per (1/ns) of radiative flux
  pl6::Rng rng(seed);
  CsvTable t;
  t.header = {"t_ns", "counts"};
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const auto counts = rng.poisson(scale * traj.pl[i]);
    t.rows.push_back({fmt(traj.t[i]), fmt(static_cast<double>(counts))});
  }
  pl6::io::write_csv(dir + "/pl_decay.csv", t);
}

// Spin-flip rate vs laser power following the saturation law.
void gen_flip_rate(const std::string& dir) {
  const std::uint64_t seed = 104;
  const double r_max = 0.46, p_sat = 6.2;  // kHz, uW
  const std::vector<double> powers = {0.5, 1.0, 2.0, 3.5, 5.0,
                                      7.0, 10.0, 15.0, 25.0, 50.0};
  pl6::Rng rng(seed);
  std::vector<double> y, s;
  for (const double p : powers) {
    const double truth = pl6::spin_flip_saturation(p, r_max, p_sat);
    const double sigma = 0.03 * truth;
    y.push_back(truth + sigma * rng.normal());
    s.push_back(sigma);
  }
  write_xy_sigma(dir + "/flip_rate.csv", powers, y, s);
}

// Photon counts vs quarter-wave-plate angle with Poisson noise around a
// mean of 1e6 counts per setting.
void gen_qwp_visibility(const std::string& dir) {
  const std::uint64_t seed = 105;
  const double mean = 1e6, visibility = 0.82, theta0 = 30.0;
  pl6::Rng rng(seed);
  std::vector<double> x, y, s;
  for (int k = 0; k <= 36; ++k) {
    const double theta = 10.0 * k;
    const double truth =
        mean * (1.0 + visibility *
                          std::cos((2.0 * theta - theta0) * M_PI / 180.0));
    const double counts = static_cast<double>(rng.poisson(truth));
    x.push_back(theta);
    y.push_back(counts);
    s.push_back(std::sqrt(std::max(counts, 1.0)));
  }
  write_xy_sigma(dir + "/qwp_visibility.csv", x, y, s);
}

// Hahn-echo decay with two-species nuclear modulation and 2% noise.
void gen_eseem_echo(const std::string& dir) {
  const std::uint64_t seed = 106;
  const double t2 = 0.54, k1 = 0.35, k2 = 0.55;   // ms, depths
  const double nu_si = 24.09, nu_c = 30.64;       // kHz
  const double noise = 0.02;
  pl6::Rng rng(seed);
  std::vector<double> x, y, s;
  for (int i = 1; i <= 200; ++i) {
    const double tau = 0.008 * i;
    const double m1 = 1.0 - k1 * std::pow(std::sin(M_PI * nu_si * tau), 2);
    const double m2 = 1.0 - k2 * std::pow(std::sin(M_PI * nu_c * tau), 2);
    const double truth = std::exp(-tau / t2) * m1 * m2;
    x.push_back(tau);
    y.push_back(truth + noise * rng.normal());
    s.push_back(noise);
  }
  write_xy_sigma(dir + "/eseem_echo.csv", x, y, s);
}

// Coherence time vs pulse number: exact power law with nominal 3% error bars
// (no noise is added, so refits recover the exponent exactly).
void gen_xy8_t2(const std::string& dir) {
  const double alpha = 0.514, beta = 0.89;  // ms at N=1, exponent
  CsvTable t;
  t.header = {"n_pulses", "t2_ms", "sigma_ms"};
  for (const int n : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
    const double t2 = alpha * std::pow(static_cast<double>(n), beta);
    t.rows.push_back({std::to_string(n), fmt(t2), fmt(0.03 * t2)});
  }
  pl6::io::write_csv(dir + "/xy8_t2.csv", t);
}

// Unlabeled line lists for seven emitters spanning the strain range: model
// eigenvalue offsets plus 30 MHz Gaussian scatter.
void gen_lines_7emitters(const std::string& dir) {
  const std::uint64_t seed = 107;
  const std::vector<double> strains = {0.688, 2.079, 4.505, 6.4, 8.0, 10.2, 12.416};
  const double sigma = 0.030;
  const pl6::FineStructureParams params;
  pl6::Rng rng(seed);
  CsvTable t;
  t.header = {"emitter", "label", "offset_ghz", "sigma_ghz"};
  for (std::size_t k = 0; k < strains.size(); ++k) {
    const auto offsets = pl6::branch_energies_direct(params, {strains[k], 0.0});
    for (const double c : offsets)
      t.rows.push_back({"em" + std::to_string(k + 1), "",
                        fmt(c + sigma * rng.normal()), fmt(sigma)});
  }
  pl6::io::write_csv(dir + "/lines_7emitters.csv", t);
}

void write_readme(const std::string& dir) {
  std::ofstream out(dir + "/README.md", std::ios::binary);
  out <<
R"(# Bundled fixtures

Synthetic data for the workbench pipeline, produced by `pl6gen` (see
`tools/gen_fixtures.cpp`). Regenerating with `pl6gen --out data/fixtures`
reproduces every file byte for byte; each generator draws from its own fixed
seed. Spectrum files use the generic `x,y,sigma` schema; their units are
listed below.

| file | generator | seed |
| --- | --- | --- |
| `ple_low_strain.csv` | excitation spectrum of one emitter at transverse strain 0.688 GHz: model line offsets (default parameters) broadened by 0.10 GHz Lorentzians, amplitude 1000 counts/line, baseline 50, Poisson noise; x = laser detuning from the multiplet centroid (GHz), y = counts | 101 |
| `linewidth_vs_power.csv` | linewidth vs power gamma0*sqrt(1 + P/p_sat), gamma0 = 0.0625 GHz, p_sat = 2.5 uW, 1.5% Gaussian noise; x = power (uW), y = FWHM (GHz) | 102 |
| `pl_decay.csv` | five-pool rate model under 60 uW resonant pumping (pump 0.5/ns at 60 uW, radiative 1/14, ISC 0.002/0.012, shelf decay 1/300, branching to ms=0 0.99540), photoluminescence scaled by 2e6 counts*ns and Poisson-sampled on a 2 ns grid to 1500 ns | 103 |
| `flip_rate.csv` | spin-flip saturation r_max*P/(P + p_sat), r_max = 0.46 kHz, p_sat = 6.2 uW, 3% Gaussian noise; x = power (uW), y = rate (kHz) | 104 |
| `qwp_visibility.csv` | counts vs quarter-wave-plate angle, mean 1e6, visibility 0.82, phase 30 deg, Poisson noise; x = angle (deg), y = counts | 105 |
| `eseem_echo.csv` | echo decay exp(-tau/0.54 ms) modulated at 24.09 and 30.64 kHz (depths 0.35/0.55), 2% Gaussian noise; x = tau (ms), y = normalized echo | 106 |
| `xy8_t2.csv` | exact power law T2(N) = 0.514 ms * N^0.89 with nominal 3% error bars, N = 1..256 | none (noiseless) |
| `lines_7emitters.csv` | unlabeled optical line offsets of seven emitters at strains 0.688, 2.079, 4.505, 6.4, 8.0, 10.2, 12.416 GHz (default global parameters), 30 MHz Gaussian scatter, sigma_ghz = 0.030 | 107 |
)";
  if (!out) throw pl6::input_error("cannot write " + dir + "/README.md");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pl6gen: regenerate the bundled data fixtures"};
  std::string out = "data/fixtures";
  app.add_option("--out", out, "target directory (default: data/fixtures)");
  CLI11_PARSE(app, argc, argv);
  try {
    gen_ple_low_strain(out);
    gen_linewidth_vs_power(out);
    gen_pl_decay(out);
    gen_flip_rate(out);
    gen_qwp_visibility(out);
    gen_eseem_echo(out);
    gen_xy8_t2(out);
    gen_lines_7emitters(out);
    write_readme(out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pl6gen: %s\n", e.what());
    return 1;
  }
  std::printf("wrote 8 fixture files + README.md under %s\n", out.c_str());
  return 0;
}
