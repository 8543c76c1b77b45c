#pragma once

// Deterministic report emission: one CSV per table plus a manifest JSON with
// input digests, seed and runtime. CSV bytes are reproducible contract; the
// manifest is exempt only in its runtime field.

#include <cstdint>
#include <string>
#include <vector>

#include "pl6/io/csv.hpp"

namespace pl6::io {

struct ReportTable {
  std::string name;  ///< file stem; written as <out_dir>/<name>.csv
  CsvTable table;
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::uint64_t>> inputs;  ///< (path, digest)
  std::vector<std::string> written;                           ///< emitted files
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
};

/// Writes all tables and <out_dir>/manifest.json. Probes writability before
/// the first table so an unwritable target fails without partial output.
/// Throws input_error (bad path) or numerical_error (NaN in a cell, via
/// format_number upstream).
Report emit_report(const std::string& command, const std::vector<ReportTable>& tables,
                   const std::string& out_dir,
                   const std::vector<std::string>& input_paths, std::uint64_t seed,
                   double runtime_ms);

}  // namespace pl6::io
