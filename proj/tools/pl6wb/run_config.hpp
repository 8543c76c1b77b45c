#pragma once

// Run configuration for the workbench CLI. Everything an invocation depends
// on lives here (no environment reads): model parameters, per-command
// options, seed, worker count. Loadable from a strict JSON file where
// unknown keys are rejected recursively.

#include <cstdint>
#include <optional>
#include <string>

#include "pl6/fine_structure.hpp"

namespace pl6wb {

struct InferOptions {
  int chains = 4;
  int steps = 30000;
  double burn_in_fraction = 0.2;
  int predictive_points = 63;
  int predictive_draws = 200;
  double predictive_max_ghz = 12.416;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;  ///< mandatory for stochastic commands
  std::string output_dir = "out";
  int workers = 1;
  pl6::FineStructureParams params;

  // levels / sweep
  double dx_ghz = 0.0, dy_ghz = 0.0;
  double delta_max_ghz = 12.416;
  int sweep_points = 125;

  // curve fits
  int n_peaks = 5;
  double fit_start_ns = 20.0;  ///< decay-fit window start (skips the pump-on rise)
  double b_field_mt = 5.7;

  // coherent-drive simulations
  double rabi_omega_ghz = 2.895, rabi_detuning_ghz = 0.0;
  double rabi_t1_ns = 16.0, rabi_pulse_ns = 2.0, rabi_dephasing = 0.0;
  double lambda_omega_ghz = 1.6;
  double lambda_t_plus_ns = 15.0, lambda_t_minus_ns = 19.0, lambda_pulse_ns = 20.0;

  InferOptions infer;
  std::string fixtures_dir = "data/fixtures";

  std::string input_path;  ///< --input; not part of the JSON config

  /// Seed for stochastic commands; input_error when absent.
  std::uint64_t require_seed(const std::string& command) const;
};

/// Parses the JSON config into `cfg`. Unknown or mistyped keys anywhere in
/// the document raise input_error naming the offending key path.
void apply_config_file(RunConfig& cfg, const std::string& path);

}  // namespace pl6wb
