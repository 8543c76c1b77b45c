#pragma once

// Strict CSV ingestion/emission: UTF-8 with header row, uniform column
// counts, full-token numeric parsing, row/column coordinates in every error.
// All numeric output goes through format_number (9 significant digits, LF
// endings, NaN refused).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pl6/bayes/likelihood.hpp"
#include "pl6/spectrum.hpp"

namespace pl6::io {

/// %.9g; throws numerical_error on NaN or infinity (no silent NaN reaches a
/// report).
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Raw strict read: rejects empty files, ragged rows, and non-UTF-8-ish
/// control bytes; strips a UTF-8 BOM and CR line endings.
CsvTable read_csv(const std::string& path);

/// Columns x,y[,sigma]; missing sigma column defaults to 1. Sorted on ingest.
Spectrum read_spectrum_csv(const std::string& path);

/// Columns t_ns,counts; Poisson weights sigma = sqrt(max(y,1)).
Spectrum read_decay_csv(const std::string& path);

/// Columns n_pulses,t2_ms,sigma_ms.
Spectrum read_t2_scaling_csv(const std::string& path);

/// Columns emitter,label,offset_ghz,sigma_ghz; empty label = unlabeled line.
/// Emitters keep their first-appearance order.
std::vector<bayes::EmitterDataset> read_line_list_csv(const std::string& path);

/// LF endings, no trailing delimiter, header included. Creates parent
/// directories. Cells must already be formatted (format_number for numerics).
void write_csv(const std::string& path, const CsvTable& table);

/// FNV-1a 64-bit content hashes for the run manifest.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace pl6::io
