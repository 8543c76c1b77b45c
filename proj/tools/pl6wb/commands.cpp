#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pl6/bayes/mcmc.hpp"
#include "pl6/errors.hpp"
#include "pl6/fine_structure.hpp"
#include "pl6/fit/models.hpp"
#include "pl6/io/report.hpp"
#include "pl6/lambda_analysis.hpp"
#include "pl6/lindblad.hpp"
#include "pl6/rate_model.hpp"
#include "pl6/spectrum.hpp"

namespace pl6wb {
namespace {

using pl6::io::CsvTable;
using pl6::io::ReportTable;

std::string fmt(double v) { return pl6::io::format_number(v); }

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

pl6::FineStructureParams checked_params(const RunConfig& cfg) {
  cfg.params.require_physical();
  return cfg.params;
}

const std::string& require_input(const RunConfig& cfg, const std::string& command) {
  if (cfg.input_path.empty())
    throw pl6::input_error(command + " needs an input CSV (--input)");
  return cfg.input_path;
}

void require_converged(const pl6::fit::FitResult& r) {
  if (!r.converged)
    throw pl6::convergence_error("fit '" + r.model + "' did not converge within " +
                                 std::to_string(r.iterations) + " iterations");
}

/// Extra (name, value, sigma) rows appended after the fit parameters.
struct DerivedRow {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;
};

CsvTable params_table(const pl6::fit::FitResult& r,
                      const std::vector<DerivedRow>& derived = {}) {
  CsvTable t;
  t.header = {"parameter", "estimate", "sigma"};
  for (std::size_t k = 0; k < r.param_names.size(); ++k)
    t.rows.push_back({r.param_names[k], fmt(r.estimates[static_cast<int>(k)]),
                      fmt(r.uncertainties[static_cast<int>(k)])});
  for (const auto& d : derived) t.rows.push_back({d.name, fmt(d.value), fmt(d.sigma)});
  return t;
}

CsvTable stats_table(const pl6::fit::FitResult& r) {
  std::string flags;
  for (const auto& f : r.flags) {
    if (!flags.empty()) flags += ';';
    flags += f;
  }
  CsvTable t;
  t.header = {"model", "converged", "iterations", "chi2_red", "flags"};
  t.rows.push_back({r.model, r.converged ? "1" : "0", std::to_string(r.iterations),
                    fmt(r.reduced_chi2), flags});
  return t;
}

int param_index(const pl6::fit::FitResult& r, const std::string& name) {
  const auto it = std::find(r.param_names.begin(), r.param_names.end(), name);
  return static_cast<int>(it - r.param_names.begin());
}

void emit(const RunConfig& cfg, const std::string& command,
          const std::vector<ReportTable>& tables, const std::vector<std::string>& inputs,
          const Timer& timer) {
  pl6::io::emit_report(command, tables, cfg.output_dir, inputs,
                       cfg.seed.value_or(0), timer.ms());
}

// -- model structure --------------------------------------------------------

void run_levels(const RunConfig& cfg) {
  Timer timer;
  const auto params = checked_params(cfg);
  const pl6::StrainVector strain{cfg.dx_ghz, cfg.dy_ghz};
  const auto es = pl6::diagonalize(pl6::build_es_hamiltonian(params, strain));
  const auto set = pl6::classify_levels(es, params, strain);

  CsvTable levels;
  levels.header = {"label", "energy_ghz", "w_ms_plus", "w_ms_zero", "w_ms_minus"};
  for (int k = 0; k < 6; ++k) {
    const auto& lvl = set[static_cast<pl6::LevelLabel>(k)];
    levels.rows.push_back({pl6::to_string(lvl.label), fmt(lvl.energy),
                           fmt(lvl.ms_weight[0]), fmt(lvl.ms_weight[1]),
                           fmt(lvl.ms_weight[2])});
  }

  CsvTable transitions;
  transitions.header = {"upper", "offset_ghz", "ms0"};
  for (const auto& line : pl6::transition_table(set))
    transitions.rows.push_back(
        {pl6::to_string(line.upper), fmt(line.offset), line.ms0 ? "1" : "0"});

  emit(cfg, "levels", {{"levels", levels}, {"transitions", transitions}}, {}, timer);
}

void run_sweep(const RunConfig& cfg) {
  Timer timer;
  const auto params = checked_params(cfg);
  if (cfg.sweep_points < 2) throw pl6::input_error("sweep needs at least 2 points");
  if (!(cfg.delta_max_ghz > 0))
    throw pl6::input_error("sweep needs a positive strain range");
  const auto grid = linspace(0.0, cfg.delta_max_ghz, cfg.sweep_points);
  const auto sets = pl6::strain_sweep(params, grid, cfg.workers);

  CsvTable sweep;
  sweep.header = {"delta_perp_ghz", "A1", "A2", "E1", "E2", "Ex", "Ey"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row{fmt(grid[i])};
    for (int k = 0; k < 6; ++k)
      row.push_back(fmt(sets[i][static_cast<pl6::LevelLabel>(k)].energy));
    sweep.rows.push_back(std::move(row));
  }
  emit(cfg, "sweep", {{"sweep", sweep}}, {}, timer);
}

// -- curve fits --------------------------------------------------------------

void run_ple_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "ple-fit");
  const auto spectrum = pl6::io::read_spectrum_csv(input);
  const auto fit = pl6::fit::fit_lorentzian_multiplet(spectrum, cfg.n_peaks);
  require_converged(fit);
  emit(cfg, "ple-fit",
       {{"ple_fit_params", params_table(fit)}, {"ple_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_linewidth_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "linewidth-fit");
  const auto data = pl6::io::read_spectrum_csv(input);
  const auto fit = pl6::fit::fit_power_broadening(data);
  require_converged(fit);
  emit(cfg, "linewidth-fit",
       {{"linewidth_fit_params", params_table(fit)},
        {"linewidth_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_decay_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "decay-fit");
  const auto full = pl6::io::read_decay_csv(input);
  std::vector<double> t, y, s;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.x[i] < cfg.fit_start_ns) continue;
    t.push_back(full.x[i]);
    y.push_back(full.y[i]);
    s.push_back(full.sigma[i]);
  }
  if (t.size() < 6)
    throw pl6::input_error("decay-fit window t >= " + fmt(cfg.fit_start_ns) +
                           " ns keeps only " + std::to_string(t.size()) +
                           " of " + std::to_string(full.size()) + " points");
  const auto windowed =
      pl6::Spectrum::make(std::move(t), std::move(y), std::move(s), full.x_unit,
                          full.y_unit);
  const auto fit = pl6::fit::fit_biexponential(windowed);
  require_converged(fit);
  const auto fidelity = pl6::fit::fidelity_from_biexp(fit);
  emit(cfg, "decay-fit",
       {{"decay_fit_params",
         params_table(fit, {{"pumped_fraction", fidelity.value, fidelity.sigma}})},
        {"decay_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_flip_rate_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "flip-rate-fit");
  const auto data = pl6::io::read_spectrum_csv(input);
  const auto fit = pl6::fit::fit_saturation(data);
  require_converged(fit);
  emit(cfg, "flip-rate-fit",
       {{"flip_rate_fit_params", params_table(fit)},
        {"flip_rate_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_visibility_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "visibility-fit");
  const auto data = pl6::io::read_spectrum_csv(input);
  const auto fit = pl6::fit::fit_visibility(data);
  require_converged(fit);
  emit(cfg, "visibility-fit",
       {{"visibility_fit_params", params_table(fit)},
        {"visibility_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_eseem_fit(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "eseem-fit");
  const auto data = pl6::io::read_spectrum_csv(input);
  const auto fit = pl6::fit::fit_eseem(data, cfg.b_field_mt);
  require_converged(fit);
  const int si = param_index(fit, "nu_si_khz"), c = param_index(fit, "nu_c_khz");
  const double nu_si = fit.estimates[si], nu_c = fit.estimates[c];
  const double ratio = nu_c / nu_si;
  // first-order propagation including the (nu_si, nu_c) covariance
  const double d_si = -nu_c / (nu_si * nu_si), d_c = 1.0 / nu_si;
  const double var = d_si * d_si * fit.covariance(si, si) +
                     d_c * d_c * fit.covariance(c, c) +
                     2.0 * d_si * d_c * fit.covariance(si, c);
  emit(cfg, "eseem-fit",
       {{"eseem_fit_params",
         params_table(fit, {{"nu_ratio", ratio, std::sqrt(std::max(var, 0.0))}})},
        {"eseem_fit_stats", stats_table(fit)}},
       {input}, timer);
}

void run_dd_scaling(const RunConfig& cfg) {
  Timer timer;
  const auto& input = require_input(cfg, "dd-scaling");
  const auto data = pl6::io::read_t2_scaling_csv(input);
  const auto fit = pl6::fit::fit_power_law(data);
  require_converged(fit);
  const int a = param_index(fit, "alpha"), b = param_index(fit, "beta");
  const double alpha = fit.estimates[a], beta = fit.estimates[b];
  const double t2_16 = alpha * std::pow(16.0, beta);
  const double da = std::pow(16.0, beta), db = t2_16 * std::log(16.0);
  const double var = da * da * fit.covariance(a, a) + db * db * fit.covariance(b, b) +
                     2.0 * da * db * fit.covariance(a, b);
  emit(cfg, "dd-scaling",
       {{"dd_scaling_params",
         params_table(fit, {{"t2_at_n16", t2_16, std::sqrt(std::max(var, 0.0))}})},
        {"dd_scaling_stats", stats_table(fit)}},
       {input}, timer);
}

// -- driven dynamics ---------------------------------------------------------

pl6::TimeSeries rabi_trace(const RunConfig& cfg) {
  if (!(cfg.rabi_pulse_ns > 0))
    throw pl6::input_error("rabi pulse length must be positive");
  return pl6::simulate_optical_rabi(cfg.rabi_omega_ghz, cfg.rabi_detuning_ghz,
                                    cfg.rabi_t1_ns, cfg.rabi_pulse_ns,
                                    cfg.rabi_dephasing);
}

void run_rabi_sim(const RunConfig& cfg) {
  Timer timer;
  const auto trace = rabi_trace(cfg);
  CsvTable t;
  t.header = {"t_ns", "excited_population"};
  for (std::size_t i = 0; i < trace.t.size(); ++i)
    t.rows.push_back({fmt(trace.t[i]), fmt(trace.value[i])});
  emit(cfg, "rabi-sim", {{"rabi_trace", t}}, {}, timer);
}

void run_rabi_fit(const RunConfig& cfg) {
  Timer timer;
  pl6::Spectrum data;
  std::vector<std::string> inputs;
  if (!cfg.input_path.empty()) {
    data = pl6::io::read_spectrum_csv(cfg.input_path);
    inputs.push_back(cfg.input_path);
  } else {
    const auto trace = rabi_trace(cfg);
    data = pl6::Spectrum::make(trace.t, trace.value, {}, "ns", "population");
  }
  const auto fit = pl6::fit::fit_damped_cosine(data);
  require_converged(fit);
  const double contrast = pl6::fit::damped_cosine_contrast(fit);
  emit(cfg, "rabi-fit",
       {{"rabi_fit_params", params_table(fit, {{"contrast", contrast, 0.0}})},
        {"rabi_fit_stats", stats_table(fit)}},
       inputs, timer);
}

void run_lambda_sim(const RunConfig& cfg) {
  Timer timer;
  if (!(cfg.lambda_omega_ghz > 0) || !(cfg.lambda_pulse_ns > 0) ||
      !(cfg.lambda_t_plus_ns > 0) || !(cfg.lambda_t_minus_ns > 0))
    throw pl6::input_error("lambda-sim needs positive drive, pulse length and"
                           " branch lifetimes");
  const double gamma_plus = 1.0 / cfg.lambda_t_plus_ns;
  const double gamma_minus = 1.0 / cfg.lambda_t_minus_ns;

  std::vector<ReportTable> tables;
  for (const auto branch : {pl6::SpinBranch::plus, pl6::SpinBranch::minus}) {
    const auto run = pl6::simulate_lambda_rabi(cfg.lambda_omega_ghz, branch,
                                               gamma_plus, gamma_minus,
                                               cfg.lambda_pulse_ns);
    CsvTable t;
    t.header = {"t_ns", "pop_plus", "pop_minus", "pop_a2", "photon_rate_per_ns"};
    for (std::size_t i = 0; i < run.t.size(); ++i)
      t.rows.push_back({fmt(run.t[i]), fmt(run.pop_plus[i]), fmt(run.pop_minus[i]),
                        fmt(run.pop_a2[i]), fmt(run.photon_rate[i])});
    tables.push_back({branch == pl6::SpinBranch::plus ? "lambda_trace_plus"
                                                      : "lambda_trace_minus",
                      std::move(t)});
  }

  const auto rec = pl6::lambda_reciprocity(cfg.lambda_omega_ghz, gamma_plus,
                                           gamma_minus, cfg.lambda_pulse_ns);
  require_converged(rec.drive_plus.fit);
  require_converged(rec.drive_minus.fit);
  CsvTable r;
  r.header = {"drive", "omega_ghz", "recycle_time_ns", "recycle_sigma_ns",
              "leak_time_ns", "leak_sigma_ns", "reciprocal"};
  for (const auto* f : {&rec.drive_plus, &rec.drive_minus})
    r.rows.push_back({f == &rec.drive_plus ? "plus" : "minus", fmt(f->omega_ghz),
                      fmt(f->recycle_time_ns), fmt(f->recycle_sigma_ns),
                      fmt(f->leak_time_ns), fmt(f->leak_sigma_ns),
                      rec.reciprocal ? "1" : "0"});
  tables.push_back({"lambda_reciprocity", std::move(r)});
  emit(cfg, "lambda-sim", tables, {}, timer);
}

// -- posterior inference -----------------------------------------------------

void run_infer(const RunConfig& cfg) {
  Timer timer;
  const auto seed = cfg.require_seed("infer");
  const auto& input = require_input(cfg, "infer");
  checked_params(cfg);
  const auto datasets = pl6::io::read_line_list_csv(input);
  const auto priors =
      pl6::bayes::PriorBox::fine_structure_default(static_cast<int>(datasets.size()));
  if (cfg.infer.chains < 2)
    throw pl6::input_error("infer needs at least 2 chains for R-hat diagnostics");
  pl6::bayes::McmcOptions options;
  options.burn_in_fraction = cfg.infer.burn_in_fraction;
  const auto chains = pl6::bayes::mcmc_sample(datasets, priors, cfg.infer.chains,
                                              cfg.infer.steps, seed, options,
                                              cfg.workers);

  const Eigen::VectorXd rhat = pl6::bayes::split_rhat(chains);
  for (int k = 0; k < rhat.size(); ++k)
    if (!(rhat[k] < 1.05))
      throw pl6::convergence_error("split R-hat " + fmt(rhat[k]) + " for parameter '" +
                                   priors.names[static_cast<std::size_t>(k)] +
                                   "' is not below 1.05; increase options.infer.steps");

  const auto merged = pl6::bayes::merge_chains(chains);
  const auto ci68 = pl6::bayes::credible_interval(merged, 0.68);
  const auto ci95 = pl6::bayes::credible_interval(merged, 0.95);

  // the posterior table is thinned for file size; intervals, R-hat and the
  // predictive band all use the full chains
  CsvTable posterior;
  posterior.header = {"chain", "draw"};
  for (const auto& n : priors.names) posterior.header.push_back(n);
  posterior.header.push_back("log_posterior");
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& chain = chains[c];
    const auto kept = static_cast<int>(chain.samples.rows());
    const int stride = std::max(1, (kept + 2399) / 2400);
    for (int i = 0; i < kept; i += stride) {
      std::vector<std::string> row{std::to_string(c), std::to_string(i)};
      for (int k = 0; k < chain.samples.cols(); ++k)
        row.push_back(fmt(chain.samples(i, k)));
      row.push_back(fmt(chain.log_posterior[i]));
      posterior.rows.push_back(std::move(row));
    }
  }

  CsvTable intervals;
  intervals.header = {"parameter", "median", "lo68", "hi68", "lo95", "hi95", "rhat"};
  for (std::size_t k = 0; k < priors.names.size(); ++k)
    intervals.rows.push_back({priors.names[k], fmt(ci68[k].median), fmt(ci68[k].lower),
                              fmt(ci68[k].upper), fmt(ci95[k].lower),
                              fmt(ci95[k].upper), fmt(rhat[static_cast<int>(k)])});

  if (cfg.infer.predictive_points < 2 || !(cfg.infer.predictive_max_ghz > 0))
    throw pl6::input_error("infer predictive grid needs >= 2 points over a positive"
                           " strain range");
  const auto grid =
      linspace(0.0, cfg.infer.predictive_max_ghz, cfg.infer.predictive_points);
  const auto band =
      pl6::bayes::posterior_predictive(merged, grid, cfg.infer.predictive_draws);
  CsvTable predictive;
  predictive.header = {"delta_perp_ghz"};
  for (int k = 0; k < 6; ++k) {
    const std::string label = pl6::to_string(static_cast<pl6::LevelLabel>(k));
    predictive.header.push_back(label + "_q05");
    predictive.header.push_back(label + "_q50");
    predictive.header.push_back(label + "_q95");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row{fmt(grid[i])};
    for (int k = 0; k < 6; ++k) {
      const auto r = static_cast<int>(i);
      row.push_back(fmt(band.q05(r, k)));
      row.push_back(fmt(band.q50(r, k)));
      row.push_back(fmt(band.q95(r, k)));
    }
    predictive.rows.push_back(std::move(row));
  }

  emit(cfg, "infer",
       {{"posterior", posterior}, {"intervals", intervals}, {"predictive", predictive}},
       {input}, timer);
}

// -- full pipeline -----------------------------------------------------------

void run_report_all(const RunConfig& cfg) {
  Timer timer;
  cfg.require_seed("report-all");
  static const std::vector<std::pair<std::string, std::string>> pipeline = {
      {"levels", ""},
      {"sweep", ""},
      {"ple-fit", "ple_low_strain.csv"},
      {"linewidth-fit", "linewidth_vs_power.csv"},
      {"decay-fit", "pl_decay.csv"},
      {"flip-rate-fit", "flip_rate.csv"},
      {"rabi-sim", ""},
      {"rabi-fit", ""},
      {"lambda-sim", ""},
      {"visibility-fit", "qwp_visibility.csv"},
      {"eseem-fit", "eseem_echo.csv"},
      {"dd-scaling", "xy8_t2.csv"},
      {"infer", "lines_7emitters.csv"},
  };
  std::vector<std::string> inputs;
  for (const auto& [name, fixture] : pipeline) {
    RunConfig sub = cfg;
    sub.output_dir = cfg.output_dir + "/" + name;
    sub.input_path = fixture.empty() ? "" : cfg.fixtures_dir + "/" + fixture;
    if (!sub.input_path.empty()) inputs.push_back(sub.input_path);
    run_command(name, sub);
  }
  emit(cfg, "report-all", {}, inputs, timer);
}

using CommandFn = void (*)(const RunConfig&);

const std::map<std::string, CommandFn>& command_table() {
  static const std::map<std::string, CommandFn> table = {
      {"levels", run_levels},
      {"sweep", run_sweep},
      {"ple-fit", run_ple_fit},
      {"linewidth-fit", run_linewidth_fit},
      {"decay-fit", run_decay_fit},
      {"flip-rate-fit", run_flip_rate_fit},
      {"rabi-sim", run_rabi_sim},
      {"rabi-fit", run_rabi_fit},
      {"lambda-sim", run_lambda_sim},
      {"visibility-fit", run_visibility_fit},
      {"eseem-fit", run_eseem_fit},
      {"dd-scaling", run_dd_scaling},
      {"infer", run_infer},
      {"report-all", run_report_all},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "levels",   "sweep",     "ple-fit",        "linewidth-fit", "decay-fit",
      "flip-rate-fit", "rabi-sim", "rabi-fit",   "lambda-sim",    "visibility-fit",
      "eseem-fit", "dd-scaling", "infer",        "report-all"};
  return names;
}

void run_command(const std::string& name, const RunConfig& cfg) {
  const auto& table = command_table();
  const auto it = table.find(name);
  if (it == table.end()) throw pl6::input_error("unknown command '" + name + "'");
  it->second(cfg);
}

}  // namespace pl6wb
