// pl6wb: command-line workbench for triplet color-center spin-photon
// analysis. Level structure, strain sweeps, curve fits, driven-dynamics
// simulations and posterior inference, all emitting deterministic CSV
// reports. Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 non-convergence. No environment variables are read; every run is fully
// determined by (command line, config file, input files).

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "pl6/errors.hpp"
#include "run_config.hpp"

namespace {

struct CliState {
  std::string config_path;
  std::string input_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

const char* describe(const std::string& command) {
  if (command == "levels") return "classify the six excited-state levels at one strain";
  if (command == "sweep") return "track labeled branches over a transverse strain ramp";
  if (command == "ple-fit") return "fit a Lorentzian multiplet to an excitation spectrum";
  if (command == "linewidth-fit") return "fit sqrt power broadening to linewidth vs power";
  if (command == "decay-fit") return "fit a biexponential pumping transient and the pumped fraction";
  if (command == "flip-rate-fit") return "fit the spin-flip rate saturation curve";
  if (command == "rabi-sim") return "simulate a resonantly driven damped optical Rabi trace";
  if (command == "rabi-fit") return "fit a damped cosine to a Rabi trace (simulated or --input)";
  if (command == "lambda-sim") return "simulate both lambda drive branches and check reciprocity";
  if (command == "visibility-fit") return "fit polarization visibility vs quarter-wave-plate angle";
  if (command == "eseem-fit") return "fit nuclear echo modulation (T2, two frequencies)";
  if (command == "dd-scaling") return "fit the T2 power law over pulse number";
  if (command == "infer") return "sample the joint posterior over shared parameters and strains";
  if (command == "report-all") return "run the full pipeline on the bundled fixtures";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pl6wb: spin-photon interface workbench"};
  app.require_subcommand(1);

  CliState cli;
  std::string chosen;
  for (const auto& name : pl6wb::command_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", cli.config_path, "JSON run configuration");
    sub->add_option("--out", cli.output_dir, "output directory (default: out)");
    sub->add_option("--seed", cli.seed, "random seed for stochastic commands")
        ->trigger_on_parse()
        ->each([&cli](const std::string&) { cli.seed_set = true; });
    sub->add_option("--workers", cli.workers, "worker threads (default: 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--input", cli.input_path, "input CSV file");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    pl6wb::RunConfig cfg;
    if (!cli.config_path.empty()) pl6wb::apply_config_file(cfg, cli.config_path);
    if (!cli.output_dir.empty()) cfg.output_dir = cli.output_dir;
    if (cli.seed_set) cfg.seed = cli.seed;
    if (cli.workers > 0) cfg.workers = cli.workers;
    if (!cli.input_path.empty()) cfg.input_path = cli.input_path;
    pl6wb::run_command(chosen, cfg);
    return 0;
  } catch (const pl6::input_error& e) {
    std::fprintf(stderr, "pl6wb %s: input error: %s\n", chosen.c_str(), e.what());
    return 2;
  } catch (const pl6::convergence_error& e) {
    std::fprintf(stderr, "pl6wb %s: convergence failure: %s\n", chosen.c_str(),
                 e.what());
    return 4;
  } catch (const pl6::numerical_error& e) {
    std::fprintf(stderr, "pl6wb %s: numerical failure: %s\n", chosen.c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pl6wb %s: unexpected failure: %s\n", chosen.c_str(), e.what());
    return 3;
  }
}
