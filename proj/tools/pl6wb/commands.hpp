#pragma once

// One entry point per workbench subcommand. Each command reads its inputs,
// runs the corresponding library pipeline and emits CSV tables plus a
// manifest under the configured output directory. Errors propagate as the
// library error types; main() maps them to exit codes.

#include <string>

#include "run_config.hpp"

namespace pl6wb {

/// All subcommand names in their canonical (help/report) order.
const std::vector<std::string>& command_names();

/// Runs one subcommand. Throws pl6::input_error, pl6::numerical_error or
/// pl6::convergence_error; anything else indicates a bug.
void run_command(const std::string& name, const RunConfig& cfg);

}  // namespace pl6wb
