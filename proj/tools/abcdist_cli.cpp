// Experiment runner for the ABC-PMC algorithms.
//
//   abcdist run <config> [--workers k] [--output dir] [--regularize | --delta x]
//   abcdist validate <config>
//   abcdist diagnostics <dir> [--output file]
//   abcdist region-export <run-dir> [--output file]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "abcdist/diagnostics.hpp"
#include "abcdist/experiment.hpp"
#include "abcdist/record_io.hpp"

namespace fs = std::filesystem;
using namespace abcdist;

namespace {

int emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream os(output, std::ios::binary);
  os << text;
  if (!os) {
    std::cerr << "error: cannot write " << output << '\n';
    return kExitIo;
  }
  return kExitOk;
}

int cmd_run(const std::string& path, std::optional<std::size_t> workers, const std::string& output, bool regularize,
            std::optional<double> delta, bool quiet) {
  const auto loaded = load_config(path);
  if (!loaded.ok()) {
    for (const auto& e : loaded.errors) std::cerr << format_config_error(path, e) << '\n';
    return kExitConfig;
  }
  RunOptions opts;
  opts.workers = workers;
  if (!output.empty()) opts.output_dir = output;
  if (delta)
    opts.delta = *delta;
  else if (regularize)
    opts.delta = 0.01;
  if (!quiet) opts.log = &std::cerr;
  const auto res = run_experiment(*loaded.config, opts, fs::path(path).stem().string());
  for (const auto& m : res.messages) std::cerr << m << '\n';
  if (!res.output_dir.empty()) std::cout << res.output_dir.string() << '\n';
  return res.exit_code;
}

int cmd_validate(const std::string& path) {
  const auto errors = validate_config(path);
  for (const auto& e : errors) std::cerr << e << '\n';
  if (!errors.empty()) return kExitConfig;
  std::cout << "ok\n";
  return kExitOk;
}

int cmd_diagnostics(const std::string& dir, const std::string& output) {
  std::ostringstream os;
  write_tidy_csv(os, diagnostics_from_files(dir));
  return emit(os.str(), output);
}

int cmd_region_export(const std::string& dir, const std::string& output) {
  if (!fs::exists(fs::path(dir) / "record.json"))
    throw Error(fmt::format("{} is not a run directory (expected record.json; runs live under runs/<algorithm>/)", dir));
  std::ostringstream os;
  write_region_csv(os, read_run_record(dir));
  return emit(os.str(), output);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-distance ABC-PMC experiment runner"};
  app.require_subcommand(1);

  std::string config_path, dir, output;
  std::size_t workers = 1;
  double delta = 0.01;
  bool regularize = false, quiet = false;

  auto* run = app.add_subcommand("run", "Run the campaign described by a config (or a manifest)");
  run->add_option("config", config_path, "Config or manifest JSON")->required();
  auto* workers_opt = run->add_option("--workers,-j", workers, "Worker threads (results depend on k)")
                          ->check(CLI::PositiveNumber);
  run->add_option("--output,-o", output, "Output directory (overrides the config)");
  run->add_flag("--regularize", regularize, "Regularise distance weights with delta = 0.01");
  auto* delta_opt = run->add_option("--delta", delta, "Regularise distance weights with this delta")
                        ->check(CLI::PositiveNumber);
  run->add_flag("--quiet,-q", quiet, "No progress output");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "Config JSON")->required();

  auto* diag = app.add_subcommand("diagnostics", "Tidy diagnostics CSV from a campaign or run directory");
  diag->add_option("dir", dir, "Campaign or run directory")->required();
  diag->add_option("--output,-o", output, "Write to a file instead of stdout");

  auto* region = app.add_subcommand("region-export", "Acceptance-region weights and thresholds per iteration");
  region->add_option("run-dir", dir, "Run directory")->required();
  region->add_option("--output,-o", output, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run)
      return cmd_run(config_path, workers_opt->count() ? std::optional<std::size_t>(workers) : std::nullopt, output,
                     regularize, delta_opt->count() ? std::optional<double>(delta) : std::nullopt, quiet);
    if (*validate) return cmd_validate(config_path);
    if (*diag) return cmd_diagnostics(dir, output);
    if (*region) return cmd_region_export(dir, output);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}
