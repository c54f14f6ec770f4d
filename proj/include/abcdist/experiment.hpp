#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abcdist/algorithms.hpp"
#include "abcdist/diagnostics.hpp"
#include "abcdist/models/observed.hpp"

namespace abcdist {

// Exactly one of the four sources is set.
struct DatasetSpec {
  std::optional<Vector> truth;                  // one dataset simulated at these parameters
  std::optional<std::size_t> prior_predictive;  // this many datasets, parameters drawn from the prior
  std::optional<std::filesystem::path> observed_file;
  std::optional<Vector> observed;               // inline observation
  std::optional<Vector> observed_truth;         // optional truth accompanying an inline observation
  std::uint64_t seed = 1;
};

struct RejectionSpec {
  std::optional<double> threshold;
  std::optional<std::size_t> top_k;  // default: ceil(alpha N)
  bool mad_distance = true;          // false: unit weights
};

struct PmcSpec {
  bool adapt_initial_distance = true;
  std::optional<std::vector<double>> fixed_schedule;
};

struct ExperimentConfig {
  std::string model_id;
  nlohmann::json model_overrides = nlohmann::json::object();
  std::vector<Algorithm> algorithms;
  RunConfig run;
  std::vector<std::uint64_t> seeds;  // defaults to {run.seed}
  DatasetSpec dataset;
  bool shared_tuning = false;
  std::optional<std::string> output_dir;
  std::optional<std::string> description;
  RejectionSpec rejection;
  PmcSpec pmc;

  // Fully explicit form, as embedded in the manifest. Parsing it back gives
  // the same configuration.
  nlohmann::json to_json() const;
};

struct ConfigError {
  std::size_t line = 0;  // 0 when no line applies
  std::string path;      // dotted key path, empty for whole-file errors
  std::string message;
};
std::string format_config_error(const std::filesystem::path& file, const ConfigError& e);

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty(); }
};

// Accepts a config file or a campaign manifest (its embedded config is used).
ConfigResult parse_config(const std::string& text, const std::filesystem::path& source = {});
ConfigResult load_config(const std::filesystem::path& path);
// Formatted, line-referenced messages; empty when the file is valid.
std::vector<std::string> validate_config(const std::filesystem::path& path);

// Builds the model named `id` with parameter overrides; throws Error on
// unknown ids, unknown override keys or invalid values.
std::unique_ptr<SimulationModel> make_model(const std::string& id, const nlohmann::json& overrides = nlohmann::json::object());

std::vector<ObservedDataset> make_datasets(const SimulationModel& model, const DatasetSpec& spec);
nlohmann::json dataset_json(const ObservedDataset& d);
ObservedDataset dataset_from_json(const nlohmann::json& j);

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNoPopulation = 3,  // budget ran out before some run produced its first population
  kExitIo = 4,
};

inline constexpr const char* kOutputRootEnv = "ABCDIST_OUTPUT_ROOT";

struct RunOptions {
  std::optional<std::size_t> workers;  // overrides the config
  std::optional<std::filesystem::path> output_dir;
  std::optional<double> delta;
  std::ostream* log = nullptr;
};

// Output directory: RunOptions, then the config's output_dir; relative paths
// resolve against $ABCDIST_OUTPUT_ROOT (or the working directory). Without
// either, <root>/<config name>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts,
                                         const std::string& fallback_name);

struct ExperimentResult {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<std::string> messages;
};

// Layout under the output directory:
//   manifest.json                 effective config, workers, SIMD path, datasets, runs
//   datasets/dNNN.json            observed values, truth, seed
//   runs/<algorithm>/dNNN_s<seed> one run record (see record_io.hpp) plus dataset.json
//   diagnostics.csv               tidy diagnostics of every run, and RMSE over datasets
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {},
                                const std::string& fallback_name = "campaign");

// Diagnostics recomputed from serialized files. `dir` is a campaign output
// directory or a single run directory.
std::vector<TidyRow> diagnostics_from_files(const std::filesystem::path& dir);

}  // namespace abcdist
