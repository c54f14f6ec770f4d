#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abcdist/algorithms.hpp"

namespace abcdist {

struct MsePoint {
  std::size_t t;
  std::size_t simulations;  // cumulative, strictly increasing in t
  std::vector<double> mse;  // one per parameter
};
using MseSeries = std::vector<MsePoint>;

// Self-normalised weighted mean of (theta_j - truth_j)^2 per parameter.
std::vector<double> weighted_mse(const ParticlePopulation& pop, const Vector& truth);
MseSeries mse_vs_truth(const RunRecord& record, const Vector& truth);

struct ParamSummary {
  double mean;
  double sd;
};
// Weighted mean and sd of the final population, per parameter.
std::vector<ParamSummary> posterior_summary(const RunRecord& record);
std::vector<ParamSummary> population_summary(const ParticlePopulation& pop);

struct RecordWithTruth {
  const RunRecord* record;
  Vector truth;
};
// sqrt(mean over datasets of the final-iteration weighted MSE), per parameter.
std::vector<double> rmse_over_datasets(std::span<const RecordWithTruth> runs);

// Distance weights per iteration rescaled to sum to 1.
std::vector<std::vector<double>> weight_trajectory(const RunRecord& record);

struct TidyRow {
  std::string algorithm;
  std::string dataset;
  std::string seed;
  std::string iteration;
  std::string parameter;
  std::string metric;
  double value;
};

std::vector<TidyRow> diagnostics_rows(const RunRecord& record, const std::string& dataset,
                                      const std::vector<std::string>& param_names,
                                      const std::optional<Vector>& truth);

void write_tidy_csv(std::ostream& os, const std::vector<TidyRow>& rows);

}  // namespace abcdist
