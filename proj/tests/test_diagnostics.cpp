#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "abcdist/diagnostics.hpp"
#include "abcdist/models/normal_toy.hpp"
#include "abcdist/record_io.hpp"

using namespace abcdist;

namespace {

ParticlePopulation pop1d(const std::vector<double>& xs, const std::vector<double>& ws) {
  ParticlePopulation p;
  for (std::size_t i = 0; i < xs.size(); ++i)
    p.particles.push_back(Particle{Vector::Constant(1, xs[i]), Vector::Constant(1, xs[i]), ws[i], std::nullopt});
  return p;
}

RunRecord record_of(const std::vector<ParticlePopulation>& pops) {
  RunRecord r;
  r.model_id = "test";
  std::size_t used = 0;
  for (std::size_t t = 0; t < pops.size(); ++t) {
    IterationRecord it;
    it.t = t + 1;
    it.population = pops[t];
    it.weights = {1.0};
    it.simulations = 10;
    used += 10;
    it.cumulative_simulations = used;
    r.iterations.push_back(it);
  }
  r.total_simulations = used;
  return r;
}

RunRecord small_run(Algorithm a) {
  NormalToyModel model;
  RunConfig c;
  c.N = 100;
  c.budget = 2000;
  c.seed = 3;
  if (a == Algorithm::Pmc) return abc_pmc(model, model.default_observed(), c);
  if (a == Algorithm::PmcAdaptPrev) return abc_pmc_adapt_prev(model, model.default_observed(), c);
  return abc_pmc_adapt_curr(model, model.default_observed(), c);
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("abcdist_diag_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("weighted MSE examples") {
  const Vector truth = Vector::Constant(1, 2.0);
  CHECK(weighted_mse(pop1d({2, 2, 2}, {1, 3, 5}), truth)[0] == 0.0);
  CHECK(weighted_mse(pop1d({1, 3}, {1, 1}), truth)[0] == doctest::Approx(1.0));
  CHECK(weighted_mse(pop1d({1, 4}, {3, 1}), truth)[0] == doctest::Approx((3 * 1 + 4) / 4.0));
  CHECK_THROWS_AS(weighted_mse(pop1d({1}, {1}), Vector::Zero(2)), Error);
}

TEST_CASE("MSE is invariant to rescaling the importance weights") {
  const auto r = small_run(Algorithm::PmcAdaptCurr);
  RunRecord scaled = r;
  for (auto& it : scaled.iterations)
    for (auto& p : it.population.particles) p.weight *= 7.0;
  const Vector truth = Vector::Constant(1, 0.0);
  const auto a = mse_vs_truth(r, truth), b = mse_vs_truth(scaled, truth);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].mse[0] == doctest::Approx(b[i].mse[0]).epsilon(1e-12));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i].simulations > a[i - 1].simulations);
}

TEST_CASE("posterior summary") {
  const auto single = record_of({pop1d({4.5}, {2.0})});
  const auto s = posterior_summary(single);
  CHECK(s[0].mean == 4.5);
  CHECK(s[0].sd == 0.0);
  const auto two = population_summary(pop1d({1, 3}, {1, 1}));
  CHECK(two[0].mean == doctest::Approx(2.0));
  CHECK(two[0].sd == doctest::Approx(1.0));
  CHECK_THROWS_AS(posterior_summary(RunRecord{}), Error);
}

TEST_CASE("RMSE over datasets") {
  const auto a = record_of({pop1d({1, 3}, {1, 1})});
  const auto b = record_of({pop1d({0, 0, 5}, {1, 2, 1})});
  const auto c = record_of({pop1d({2.5}, {1})});
  const Vector ta = Vector::Constant(1, 2.0), tb = Vector::Constant(1, 1.0), tc = Vector::Constant(1, 0.0);
  const std::vector<RecordWithTruth> one{{&a, ta}};
  CHECK(rmse_over_datasets(one)[0] == doctest::Approx(std::sqrt(weighted_mse(a.final_iteration().population, ta)[0])));
  std::vector<RecordWithTruth> all{{&a, ta}, {&b, tb}, {&c, tc}};
  const double expected = rmse_over_datasets(all)[0];
  const double direct = std::sqrt((1.0 + (1 * 1 + 2 * 1 + 16) / 4.0 + 6.25) / 3.0);
  CHECK(expected == doctest::Approx(direct).epsilon(1e-14));
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.truth[0] < y.truth[0]; });
  do {
    CHECK(rmse_over_datasets(all)[0] == doctest::Approx(expected).epsilon(1e-14));
  } while (std::next_permutation(all.begin(), all.end(),
                                 [](const auto& x, const auto& y) { return x.truth[0] < y.truth[0]; }));
}

TEST_CASE("weight trajectories sum to one and keep ratios") {
  const auto r = small_run(Algorithm::PmcAdaptPrev);
  const auto traj = weight_trajectory(r);
  REQUIRE(traj.size() == r.iterations.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    double s = 0.0;
    for (double x : traj[t]) s += x;
    CHECK(std::abs(s - 1.0) <= 1e-12);
    const auto& w = r.iterations[t].weights;
    CHECK(traj[t][0] / traj[t][1] == doctest::Approx(w[0] / w[1]).epsilon(1e-14));
  }
}

TEST_CASE("tidy diagnostics rows") {
  const auto r = small_run(Algorithm::Pmc);
  const auto rows = diagnostics_rows(r, "d000", {"theta"}, Vector::Constant(1, 0.0));
  std::size_t mse_rows = 0;
  for (const auto& row : rows) {
    CHECK(row.algorithm == "pmc");
    CHECK(row.dataset == "d000");
    mse_rows += row.metric == "mse";
  }
  CHECK(mse_rows == r.iterations.size());
  std::ostringstream os;
  write_tidy_csv(os, rows);
  CHECK(os.str().rfind("algorithm,dataset,seed,iteration,parameter,metric,value\n", 0) == 0);
  const auto no_truth = diagnostics_rows(r, "d000", {"theta"}, std::nullopt);
  CHECK(std::none_of(no_truth.begin(), no_truth.end(), [](const TidyRow& x) { return x.metric == "mse"; }));
}

TEST_CASE("run records survive a write and read round trip") {
  for (Algorithm a : {Algorithm::Pmc, Algorithm::PmcAdaptPrev, Algorithm::PmcAdaptCurr}) {
    auto r = small_run(a);
    r.notes.push_back("a note, with \"quotes\"");
    const auto dir = scratch(std::string(algorithm_name(a)));
    write_run_record(r, dir, {"theta"});
    const auto back = read_run_record(dir);
    CHECK(records_identical(r, back));
    CHECK(read_param_names(dir) == std::vector<std::string>{"theta"});
    const auto before = diagnostics_rows(r, "d", {"theta"}, Vector::Zero(1));
    const auto after = diagnostics_rows(back, "d", {"theta"}, Vector::Zero(1));
    REQUIRE(before.size() == after.size());
    bool same = true;
    for (std::size_t i = 0; i < before.size(); ++i)
      same &= before[i].metric == after[i].metric && before[i].value == after[i].value;
    CHECK(same);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1e-300, -2.5e17, 3.141592653589793, 0.0}) CHECK(parse_double(format_double(v)) == v);
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isinf(parse_double(format_double(std::numeric_limits<double>::infinity()))));
  CHECK_THROWS(parse_double("1.5x"));
}
