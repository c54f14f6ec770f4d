#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "abcdist/experiment.hpp"
#include "abcdist/record_io.hpp"

using namespace abcdist;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(ABCDIST_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("abcdist_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const ConfigResult& r, const std::string& what) {
  for (const auto& e : r.errors)
    if (e.message.find(what) != std::string::npos || e.path.find(what) != std::string::npos) return true;
  return false;
}

const char* kValid = R"({
  "model": "normal",
  "algorithm": "pmc",
  "run": {"N": 100, "alpha": 0.5, "budget": 1000},
  "dataset": {"observed": [0, 0]}
})";

std::string with(const std::string& key, const std::string& value) {
  auto j = nlohmann::json::parse(kValid);
  j[key] = nlohmann::json::parse(value);
  return j.dump(2);
}

}  // namespace

TEST_CASE("a minimal config parses") {
  const auto r = parse_config(kValid);
  REQUIRE(r.ok());
  CHECK(r.config->model_id == "normal");
  CHECK(r.config->algorithms == std::vector<Algorithm>{Algorithm::Pmc});
  CHECK(r.config->run.N == 100);
  CHECK(r.config->seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("alpha = 1 is rejected with the alpha < 1 constraint") {
  const auto r = parse_config(with("run", R"({"N": 100, "alpha": 1.0, "budget": 1000})"));
  CHECK_FALSE(r.ok());
  CHECK(mentions(r, "alpha < 1"));
  const auto msgs = validate_config(fs::path(ABCDIST_SOURCE_DIR) / "tests/data/alpha_one.json");
  REQUIRE_FALSE(msgs.empty());
  CHECK(msgs.front().find("alpha_one.json:") != std::string::npos);
}

TEST_CASE("a missing dataset is an error") {
  auto j = nlohmann::json::parse(kValid);
  j.erase("dataset");
  const auto r = parse_config(j.dump());
  CHECK_FALSE(r.ok());
  CHECK(mentions(r, "dataset"));
  const auto two = parse_config(with("dataset", R"({"observed": [0, 0], "truth": [1]})"));
  CHECK_FALSE(two.ok());
}

TEST_CASE("budget below N is an error") {
  const auto r = parse_config(with("run", R"({"N": 100, "alpha": 0.5, "budget": 99})"));
  CHECK_FALSE(r.ok());
  CHECK(mentions(r, "budget"));
}

TEST_CASE("unknown keys are errors with a line number") {
  const std::string text = "{\n  \"model\": \"normal\",\n  \"algorithm\": \"pmc\",\n  \"run\": {\"N\": 100, \"budget\": 1000},\n"
                           "  \"dataset\": {\"observed\": [0, 0]},\n  \"sharde_tuning\": true\n}\n";
  const auto r = parse_config(text, "typo.json");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors.front().line == 6);
  CHECK(format_config_error("typo.json", r.errors.front()).rfind("typo.json:6:", 0) == 0);
  const auto bad_override = parse_config(with("model", R"({"id": "normal", "overrides": {"prior_sdd": 3}})"));
  CHECK_FALSE(bad_override.ok());
  const auto bad_alg = parse_config(with("algorithm", R"("smc")"));
  CHECK_FALSE(bad_alg.ok());
  const auto syntax = parse_config("{\n  \"model\": \"normal\",\n  oops\n}");
  REQUIRE_FALSE(syntax.ok());
  CHECK(syntax.errors.front().line == 3);
}

TEST_CASE("shipped configs validate") {
  for (const auto& name : {"lv.json", "gk.json", "normal.json", "smoke.json", "fig1_rejection.json"})
    CHECK_MESSAGE(validate_config(kConfigs / name).empty(), name);
  const auto lv = load_config(kConfigs / "lv.json");
  REQUIRE(lv.ok());
  CHECK(lv.config->run.budget == 50000);
  CHECK(lv.config->run.N == 200);
  CHECK(lv.config->run.alpha == 0.5);
  const auto gk = load_config(kConfigs / "gk.json");
  REQUIRE(gk.ok());
  CHECK(gk.config->run.budget == 1000000);
  CHECK(gk.config->run.N == 1000);
  CHECK(*gk.config->dataset.prior_predictive == 100);
  CHECK(gk.config->algorithms.size() == 3);
}

TEST_CASE("the effective config round trips through JSON") {
  const auto r = load_config(kConfigs / "lv.json");
  REQUIRE(r.ok());
  const auto again = parse_config(r.config->to_json().dump());
  REQUIRE(again.ok());
  CHECK(again.config->to_json() == r.config->to_json());
}

TEST_CASE("model factory") {
  CHECK(make_model("gk")->n_summaries() == 7);
  CHECK(make_model("lv")->n_summaries() == 32);
  CHECK(make_model("gk", nlohmann::json::parse(R"({"order_indices": [10, 20], "dataset_size": 30})"))->n_summaries() == 2);
  CHECK_THROWS_AS(make_model("nope"), Error);
  CHECK_THROWS_AS(make_model("normal", {{"colour", 1}}), Error);
  CHECK_THROWS_AS(make_model("gk", nlohmann::json::parse(R"({"order_indices": [20, 10]})")), Error);
}

TEST_CASE("prior-predictive datasets are reproducible") {
  const auto model = make_model("normal");
  DatasetSpec spec;
  spec.prior_predictive = 3;
  spec.seed = 5;
  const auto a = make_datasets(*model, spec), b = make_datasets(*model, spec);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].values == b[i].values);
    REQUIRE(a[i].truth);
    const auto back = dataset_from_json(dataset_json(a[i]));
    CHECK(back.values == a[i].values);
    CHECK(*back.truth == *a[i].truth);
  }
  CHECK(a[0].values != a[1].values);
}

TEST_CASE("smoke campaign and manifest rerun") {
  const auto cfg = load_config(kConfigs / "smoke.json");
  REQUIRE(cfg.ok());
  const auto dir = scratch("smoke");
  RunOptions opts;
  opts.output_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_experiment(*cfg.config, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(res.exit_code == kExitOk);
  CHECK(secs < 5.0);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest["runs"].size() == 3);
  std::size_t most = 0;
  for (const auto& r : manifest["runs"]) most = std::max<std::size_t>(most, r["iterations"].get<std::size_t>());
  CHECK(most >= 4);

  // Diagnostics recomputed from files match the ones written during the run.
  std::ostringstream os;
  write_tidy_csv(os, diagnostics_from_files(dir));
  CHECK(os.str() == slurp(dir / "diagnostics.csv"));

  // Rerun from the manifest alone.
  const auto from_manifest = load_config(dir / "manifest.json");
  REQUIRE(from_manifest.ok());
  const auto dir2 = scratch("smoke_rerun");
  RunOptions opts2;
  opts2.output_dir = dir2;
  REQUIRE(run_experiment(*from_manifest.config, opts2).exit_code == kExitOk);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), dir);
    CHECK_MESSAGE(slurp(e.path()) == slurp(dir2 / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 6);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("shared tuning hands adapt-curr's first iteration to the others") {
  auto cfg = *load_config(kConfigs / "smoke.json").config;
  cfg.run.N = 100;
  cfg.run.budget = 2000;
  const auto dir = scratch("shared");
  RunOptions opts;
  opts.output_dir = dir;
  REQUIRE(run_experiment(cfg, opts).exit_code == kExitOk);
  const auto curr = read_run_record(dir / "runs/pmc-adapt-curr/d000_s1");
  const auto pmc = read_run_record(dir / "runs/pmc/d000_s1");
  const auto prev = read_run_record(dir / "runs/pmc-adapt-prev/d000_s1");
  const auto& first = curr.iterations.front();
  CHECK(pmc.iterations.front().weights == first.weights);
  REQUIRE(pmc.iterations.front().region.size() == 1);
  CHECK(pmc.iterations.front().region.stages()[0].threshold == first.threshold);
  REQUIRE(prev.iterations.front().region.size() == 1);
  CHECK(prev.iterations.front().region.stages()[0].threshold == first.threshold);
  CHECK(prev.iterations.front().region.stages()[0].distance.weights() == first.weights);
  fs::remove_all(dir);
}

TEST_CASE("exit code 3 when no population can be produced") {
  auto cfg = *parse_config(kValid).config;
  cfg.algorithms = {Algorithm::PmcAdaptCurr};
  cfg.run.budget = 150;  // below M = 200
  const auto dir = scratch("nopop");
  RunOptions opts;
  opts.output_dir = dir;
  CHECK(run_experiment(cfg, opts).exit_code == kExitNoPopulation);
  fs::remove_all(dir);
}

TEST_CASE("output root from the environment") {
  auto cfg = *parse_config(kValid).config;
  const auto root = scratch("root");
  ::setenv(kOutputRootEnv, root.c_str(), 1);
  CHECK(resolve_output_dir(cfg, {}, "named") == root / "named");
  cfg.output_dir = "sub";
  CHECK(resolve_output_dir(cfg, {}, "named") == root / "sub");
  RunOptions opts;
  opts.output_dir = "/tmp/explicit";
  CHECK(resolve_output_dir(cfg, opts, "named") == fs::path("/tmp/explicit"));
  ::unsetenv(kOutputRootEnv);
}
