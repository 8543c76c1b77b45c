#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pl6/errors.hpp"

namespace pl6wb {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw pl6::input_error("config key '" + path + "': " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!ok.count(key)) bad(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "expected a finite number");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

void fetch(const json& j, const char* key, const std::string& prefix, double& out) {
  if (j.contains(key)) out = as_number(j.at(key), prefix + key);
}

void fetch(const json& j, const char* key, const std::string& prefix, int& out) {
  if (j.contains(key)) out = as_int(j.at(key), prefix + key);
}

void fetch(const json& j, const char* key, const std::string& prefix, std::string& out) {
  if (j.contains(key)) {
    if (!j.at(key).is_string()) bad(prefix + key, "expected a string");
    out = j.at(key).get<std::string>();
  }
}

void parse_params(const json& j, pl6::FineStructureParams& p) {
  require_object(j, "params");
  reject_unknown(j, "params", {"lambda_so", "d_es", "d1", "d2", "d_gs"});
  fetch(j, "lambda_so", "params.", p.lambda_so);
  fetch(j, "d_es", "params.", p.d_es);
  fetch(j, "d1", "params.", p.d1);
  fetch(j, "d2", "params.", p.d2);
  fetch(j, "d_gs", "params.", p.d_gs);
}

void parse_infer(const json& j, InferOptions& o) {
  require_object(j, "options.infer");
  reject_unknown(j, "options.infer",
                 {"chains", "steps", "burn_in_fraction", "predictive_points",
                  "predictive_draws", "predictive_max_ghz"});
  fetch(j, "chains", "options.infer.", o.chains);
  fetch(j, "steps", "options.infer.", o.steps);
  fetch(j, "burn_in_fraction", "options.infer.", o.burn_in_fraction);
  fetch(j, "predictive_points", "options.infer.", o.predictive_points);
  fetch(j, "predictive_draws", "options.infer.", o.predictive_draws);
  fetch(j, "predictive_max_ghz", "options.infer.", o.predictive_max_ghz);
}

void parse_options(const json& j, RunConfig& cfg) {
  require_object(j, "options");
  reject_unknown(j, "options",
                 {"dx_ghz", "dy_ghz", "delta_max_ghz", "sweep_points", "n_peaks",
                  "fit_start_ns", "b_field_mt", "rabi_omega_ghz", "rabi_detuning_ghz",
                  "rabi_t1_ns", "rabi_pulse_ns", "rabi_dephasing", "lambda_omega_ghz",
                  "lambda_t_plus_ns", "lambda_t_minus_ns", "lambda_pulse_ns",
                  "fixtures_dir", "infer"});
  fetch(j, "dx_ghz", "options.", cfg.dx_ghz);
  fetch(j, "dy_ghz", "options.", cfg.dy_ghz);
  fetch(j, "delta_max_ghz", "options.", cfg.delta_max_ghz);
  fetch(j, "sweep_points", "options.", cfg.sweep_points);
  fetch(j, "n_peaks", "options.", cfg.n_peaks);
  fetch(j, "fit_start_ns", "options.", cfg.fit_start_ns);
  fetch(j, "b_field_mt", "options.", cfg.b_field_mt);
  fetch(j, "rabi_omega_ghz", "options.", cfg.rabi_omega_ghz);
  fetch(j, "rabi_detuning_ghz", "options.", cfg.rabi_detuning_ghz);
  fetch(j, "rabi_t1_ns", "options.", cfg.rabi_t1_ns);
  fetch(j, "rabi_pulse_ns", "options.", cfg.rabi_pulse_ns);
  fetch(j, "rabi_dephasing", "options.", cfg.rabi_dephasing);
  fetch(j, "lambda_omega_ghz", "options.", cfg.lambda_omega_ghz);
  fetch(j, "lambda_t_plus_ns", "options.", cfg.lambda_t_plus_ns);
  fetch(j, "lambda_t_minus_ns", "options.", cfg.lambda_t_minus_ns);
  fetch(j, "lambda_pulse_ns", "options.", cfg.lambda_pulse_ns);
  fetch(j, "fixtures_dir", "options.", cfg.fixtures_dir);
  if (j.contains("infer")) parse_infer(j.at("infer"), cfg.infer);
}

}  // namespace

std::uint64_t RunConfig::require_seed(const std::string& command) const {
  if (!seed)
    throw pl6::input_error(command + " is stochastic: a seed is required (--seed or"
                                     " \"seed\" in the config file)");
  return *seed;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pl6::input_error("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw pl6::input_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  require_object(doc, "(top level)");
  reject_unknown(doc, "", {"seed", "output_dir", "workers", "params", "options"});
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) bad("seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  fetch(doc, "output_dir", "", cfg.output_dir);
  fetch(doc, "workers", "", cfg.workers);
  if (cfg.workers < 1) bad("workers", "must be >= 1");
  if (doc.contains("params")) parse_params(doc.at("params"), cfg.params);
  if (doc.contains("options")) parse_options(doc.at("options"), cfg);
}

}  // namespace pl6wb
