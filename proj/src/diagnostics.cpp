#include "abcdist/diagnostics.hpp"

#include <cmath>
#include <fmt/format.h>

namespace abcdist {

std::vector<double> weighted_mse(const ParticlePopulation& pop, const Vector& truth) {
  pop.validate();
  const auto n = static_cast<std::size_t>(truth.size());
  if (static_cast<std::size_t>(pop.particles.front().theta.size()) != n) throw Error("truth has the wrong dimension");
  std::vector<double> acc(n, 0.0);
  double total = 0.0;
  for (const auto& p : pop.particles) {
    total += p.weight;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = p.theta[static_cast<Eigen::Index>(j)] - truth[static_cast<Eigen::Index>(j)];
      acc[j] += p.weight * e * e;
    }
  }
  for (double& a : acc) a /= total;
  return acc;
}

MseSeries mse_vs_truth(const RunRecord& record, const Vector& truth) {
  MseSeries out;
  for (const auto& it : record.iterations)
    out.push_back({it.t, it.cumulative_simulations, weighted_mse(it.population, truth)});
  return out;
}

std::vector<ParamSummary> population_summary(const ParticlePopulation& pop) {
  const MeanCov mc = weighted_mean_cov(pop.weighted_thetas());
  std::vector<ParamSummary> out;
  for (Eigen::Index j = 0; j < mc.mean.size(); ++j)
    out.push_back({mc.mean[j], std::sqrt(std::max(0.0, mc.cov(j, j)))});
  return out;
}

std::vector<ParamSummary> posterior_summary(const RunRecord& record) {
  return population_summary(record.final_iteration().population);
}

std::vector<double> rmse_over_datasets(std::span<const RecordWithTruth> runs) {
  if (runs.empty()) throw Error("rmse_over_datasets: no runs");
  std::vector<double> acc;
  for (const auto& r : runs) {
    const auto mse = weighted_mse(r.record->final_iteration().population, r.truth);
    if (acc.empty()) acc.assign(mse.size(), 0.0);
    if (mse.size() != acc.size()) throw Error("rmse_over_datasets: runs disagree on parameter count");
    for (std::size_t j = 0; j < mse.size(); ++j) acc[j] += mse[j];
  }
  for (double& a : acc) a = std::sqrt(a / static_cast<double>(runs.size()));
  return acc;
}

std::vector<std::vector<double>> weight_trajectory(const RunRecord& record) {
  std::vector<std::vector<double>> out;
  for (const auto& it : record.iterations) {
    double total = 0.0;
    for (double w : it.weights) total += w;
    std::vector<double> v = it.weights;
    for (double& w : v) w /= total;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<TidyRow> diagnostics_rows(const RunRecord& record, const std::string& dataset,
                                      const std::vector<std::string>& param_names,
                                      const std::optional<Vector>& truth) {
  std::vector<TidyRow> rows;
  const std::string alg(algorithm_name(record.algorithm));
  const std::string seed = std::to_string(record.config.seed);
  auto add = [&](const std::string& iter, const std::string& param, const char* metric, double v) {
    rows.push_back({alg, dataset, seed, iter, param, metric, v});
  };
  const auto trajectory = weight_trajectory(record);
  for (std::size_t i = 0; i < record.iterations.size(); ++i) {
    const auto& it = record.iterations[i];
    const std::string t = std::to_string(it.t);
    add(t, "", "simulations", static_cast<double>(it.cumulative_simulations));
    add(t, "", "threshold", it.threshold);
    add(t, "", "eccentricity", it.eccentricity);
    add(t, "", "importance_weight_ratio", it.importance_weight_ratio);
    if (it.population.empty()) continue;
    const auto summary = population_summary(it.population);
    std::vector<double> mse;
    if (truth) mse = weighted_mse(it.population, *truth);
    for (std::size_t j = 0; j < summary.size(); ++j) {
      const std::string& p = j < param_names.size() ? param_names[j] : std::to_string(j + 1);
      add(t, p, "posterior_mean", summary[j].mean);
      add(t, p, "posterior_sd", summary[j].sd);
      if (truth) add(t, p, "mse", mse[j]);
    }
    for (std::size_t s = 0; s < trajectory[i].size(); ++s)
      add(t, "s" + std::to_string(s + 1), "normalized_weight", trajectory[i][s]);
  }
  return rows;
}

void write_tidy_csv(std::ostream& os, const std::vector<TidyRow>& rows) {
  os << "algorithm,dataset,seed,iteration,parameter,metric,value\n";
  for (const auto& r : rows)
    os << fmt::format("{},{},{},{},{},{},{}\n", r.algorithm, r.dataset, r.seed, r.iteration, r.parameter, r.metric,
                      r.value);
}

}  // namespace abcdist
