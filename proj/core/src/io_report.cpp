#include "pl6/io/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pl6/errors.hpp"

namespace pl6::io {

Report emit_report(const std::string& command, const std::vector<ReportTable>& tables,
                   const std::string& out_dir,
                   const std::vector<std::string>& input_paths, std::uint64_t seed,
                   double runtime_ms) {
  if (command.empty()) throw input_error("report needs a command name");
  namespace fs = std::filesystem;
  const fs::path dir(out_dir.empty() ? "." : out_dir);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw input_error("cannot create output directory '" + dir.string() + "': " +
                            ec.message());

  {
    // writability probe: fail before any table hits disk
    const fs::path probe = dir / ".write_probe";
    std::ofstream test(probe, std::ios::binary | std::ios::trunc);
    if (!test) throw input_error("output directory '" + dir.string() + "' is not writable");
    test.close();
    fs::remove(probe, ec);
  }

  Report report;
  report.command = command;
  report.seed = seed;
  report.runtime_ms = runtime_ms;
  for (const auto& in : input_paths) report.inputs.emplace_back(in, fnv1a64_file(in));

  for (const auto& t : tables) {
    if (t.name.empty()) throw input_error("report table needs a name");
    const fs::path path = dir / (t.name + ".csv");
    write_csv(path.string(), t.table);
    report.written.push_back(path.string());
  }

  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["runtime_ms"] = runtime_ms;
  manifest["inputs"] = nlohmann::json::array();
  for (const auto& [path, digest] : report.inputs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(digest));
    manifest["inputs"].push_back({{"path", path}, {"fnv1a64", hex}});
  }
  manifest["outputs"] = nlohmann::json::array();
  for (const auto& written : report.written) {
    char hex[17];
    std::snprintf(hex, sizeof hex,
                  "%016llx", static_cast<unsigned long long>(fnv1a64_file(written)));
    manifest["outputs"].push_back(
        {{"path", fs::path(written).filename().string()}, {"fnv1a64", hex}});
  }

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw input_error("cannot write '" + manifest_path.string() + "'");
  out << manifest.dump(2) << '\n';
  out.flush();
  if (!out) throw input_error("short write to '" + manifest_path.string() + "'");
  report.written.push_back(manifest_path.string());
  return report;
}

}  // namespace pl6::io
