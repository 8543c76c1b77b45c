#include "pl6/io/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pl6/errors.hpp"

namespace pl6::io {

namespace {

std::string cell_coord(std::size_t row, std::size_t col) {
  // rows are 1-based including the header, columns 1-based
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_double(const std::string& token, std::size_t row, std::size_t col,
                    const std::string& path) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw input_error(path + ": '" + token + "' is not a number (" +
                      cell_coord(row, col) + ")");
  return value;
}

std::size_t column_index(const CsvTable& table, const std::string& name,
                         const std::string& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end())
    throw input_error(path + ": missing required column '" + name + "'");
  return static_cast<std::size_t>(it - table.header.begin());
}

std::vector<double> numeric_column(const CsvTable& table, std::size_t col,
                                   const std::string& path) {
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    out.push_back(parse_double(table.rows[r][col], r + 2, col + 1, path));
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v))
    throw numerical_error("refusing to format a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0)
    text.erase(0, 3);
  if (text.empty()) throw input_error(path + ": file is empty");

  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (pos > text.size()) break;  // trailing newline
      throw input_error(path + ": blank line at row " + std::to_string(line_no));
    }
    for (char c : line)
      if (static_cast<unsigned char>(c) < 0x20 && c != '\t')
        throw input_error(path + ": control byte at row " + std::to_string(line_no));

    std::vector<std::string> cells;
    std::size_t cell_start = 0;
    for (std::size_t k = 0; k <= line.size(); ++k) {
      if (k == line.size() || line[k] == ',') {
        cells.push_back(line.substr(cell_start, k - cell_start));
        cell_start = k + 1;
      }
    }
    if (line_no == 1) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw input_error(path + ": row " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw input_error(path + ": missing header row");
  return table;
}

Spectrum read_spectrum_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t xi = column_index(table, "x", path);
  const std::size_t yi = column_index(table, "y", path);
  const auto x = numeric_column(table, xi, path);
  const auto y = numeric_column(table, yi, path);
  std::vector<double> sigma;
  const auto si = std::find(table.header.begin(), table.header.end(), "sigma");
  if (si != table.header.end())
    sigma = numeric_column(table, static_cast<std::size_t>(si - table.header.begin()),
                           path);
  try {
    return Spectrum::make(x, y, sigma);
  } catch (const input_error& err) {
    throw input_error(path + ": " + err.what());
  }
}

Spectrum read_decay_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto t = numeric_column(table, column_index(table, "t_ns", path), path);
  const auto counts = numeric_column(table, column_index(table, "counts", path), path);
  std::vector<double> sigma(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    sigma[k] = std::sqrt(std::max(counts[k], 1.0));
  try {
    Spectrum s = Spectrum::make(t, counts, sigma, "ns", "counts");
    return s;
  } catch (const input_error& err) {
    throw input_error(path + ": " + err.what());
  }
}

Spectrum read_t2_scaling_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const auto n = numeric_column(table, column_index(table, "n_pulses", path), path);
  const auto t2 = numeric_column(table, column_index(table, "t2_ms", path), path);
  const auto sig = numeric_column(table, column_index(table, "sigma_ms", path), path);
  try {
    return Spectrum::make(n, t2, sig, "pulses", "ms");
  } catch (const input_error& err) {
    throw input_error(path + ": " + err.what());
  }
}

std::vector<bayes::EmitterDataset> read_line_list_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t ei = column_index(table, "emitter", path);
  const std::size_t li = column_index(table, "label", path);
  const std::size_t oi = column_index(table, "offset_ghz", path);
  const std::size_t si = column_index(table, "sigma_ghz", path);

  std::vector<bayes::EmitterDataset> datasets;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row[ei].empty())
      throw input_error(path + ": empty emitter name (" + cell_coord(r + 2, ei + 1) + ")");
    bayes::MeasuredLine line;
    if (!row[li].empty()) {
      try {
        line.label = level_label_from_string(row[li]);
      } catch (const input_error& err) {
        throw input_error(path + ": " + err.what() + " (" + cell_coord(r + 2, li + 1) +
                          ")");
      }
    }
    line.offset_ghz = parse_double(row[oi], r + 2, oi + 1, path);
    line.sigma_ghz = parse_double(row[si], r + 2, si + 1, path);

    auto it = std::find_if(datasets.begin(), datasets.end(),
                           [&](const bayes::EmitterDataset& d) { return d.emitter == row[ei]; });
    if (it == datasets.end()) {
      datasets.push_back(bayes::EmitterDataset{row[ei], {}});
      it = std::prev(datasets.end());
    }
    it->lines.push_back(line);
  }
  if (datasets.empty()) throw input_error(path + ": no data rows");
  for (const auto& ds : datasets) {
    try {
      ds.validate();
    } catch (const input_error& err) {
      throw input_error(path + ": " + err.what());
    }
  }
  return datasets;
}

void write_csv(const std::string& path, const CsvTable& table) {
  if (table.header.empty()) throw input_error("refusing to write a headerless CSV");
  for (const auto& row : table.rows)
    if (row.size() != table.header.size())
      throw input_error("ragged row while writing '" + path + "'");

  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec)
      throw input_error("cannot create directory '" + p.parent_path().string() +
                        "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot open '" + path + "' for writing");

  auto emit_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out << ',';
      out << cells[k];
    }
    out << '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) emit_row(row);
  out.flush();
  if (!out) throw input_error("short write to '" + path + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "' for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  return fnv1a64(text);
}

}  // namespace pl6::io
