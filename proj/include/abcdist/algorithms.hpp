#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "abcdist/distance.hpp"
#include "abcdist/model.hpp"
#include "abcdist/population.hpp"

namespace abcdist {

struct RunConfig {
  std::size_t N = 1000;             // population size
  double alpha = 0.5;               // threshold quantile, strictly below 1
  std::size_t budget = 100'000;     // total simulate() calls allowed
  std::size_t scale_store_cap = 10'000;
  std::optional<double> delta;      // distance-weight regularisation, off by default
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  void validate() const;
};

enum class Algorithm { Rejection, Importance, Pmc, PmcAdaptPrev, PmcAdaptCurr };
std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

enum class Termination {
  Completed,          // single-pass algorithms
  BudgetExhausted,    // next iteration could not start
  PartialIteration,   // budget ran out inside an iteration; it was discarded
  ScheduleExhausted,  // fixed threshold schedule ran out
};
std::string_view termination_name(Termination t);
Termination parse_termination(std::string_view name);

struct IterationRecord {
  std::size_t t = 1;
  ParticlePopulation population;
  // Distance weights and threshold this iteration produced. Particle
  // distances are measured under `weights`.
  //   pmc:            the run's fixed distance; threshold = h_{t+1}
  //   pmc-adapt-prev: d^{t+1};                  threshold = h_{t+1}
  //   pmc-adapt-curr: d^t;                      threshold = h_t
  //   rejection:      the distance used;        threshold = h
  std::vector<double> weights;
  double threshold = 0.0;
  // Every particle in `population` satisfies this rule.
  NestedAcceptanceRule region;

  std::size_t simulations = 0;
  std::size_t cumulative_simulations = 0;
  std::size_t acceptances = 0;
  std::size_t incomplete = 0;
  std::size_t support_rejections = 0;
  double importance_weight_ratio = 1.0;
  double eccentricity = 1.0;
  std::vector<std::size_t> zero_scale_indices;
};

struct RunRecord {
  Algorithm algorithm = Algorithm::Pmc;
  std::string model_id;
  RunConfig config;
  Vector observed;
  std::string simd_isa;
  std::vector<IterationRecord> iterations;
  Termination termination = Termination::BudgetExhausted;
  std::size_t total_simulations = 0;
  std::size_t partial_iteration_simulations = 0;
  std::vector<std::string> notes;

  const IterationRecord& final_iteration() const;
};

// Distance and first threshold handed to pmc / pmc-adapt-prev in place of
// their own first-iteration tuning.
struct InitialTuning {
  DistanceFunction distance;
  double h1;
};

struct PmcOptions {
  bool adapt_initial_distance = true;
  std::optional<std::vector<double>> fixed_schedule;
  std::optional<InitialTuning> tuning;
};

struct TopK {
  std::size_t k;
};
using RejectionThreshold = std::variant<double, TopK>;

struct RejectionResult {
  ParticlePopulation accepted;
  RunRecord record;
};

// N prior draws; distance given, or MAD-scaled from the N simulations when
// `distance` is empty.
RejectionResult abc_rejection(const SimulationModel& model, const Vector& observed, std::size_t N,
                              RejectionThreshold threshold, std::optional<DistanceFunction> distance,
                              std::uint64_t seed);

// N proposals from q; returns the accepted ones weighted by pi / q.
ParticlePopulation abc_importance(const SimulationModel& model, const Vector& observed,
                                  const ImportanceDensity& q, const NestedAcceptanceRule& rule,
                                  std::size_t N, std::uint64_t seed);

RunRecord abc_pmc(const SimulationModel& model, const Vector& observed, const RunConfig& config,
                  const PmcOptions& options = {});

RunRecord abc_pmc_adapt_prev(const SimulationModel& model, const Vector& observed, const RunConfig& config,
                             const std::optional<InitialTuning>& tuning = std::nullopt);

RunRecord abc_pmc_adapt_curr(const SimulationModel& model, const Vector& observed, const RunConfig& config);

// The distance and threshold from the first iteration of pmc-adapt-curr
// with the same seed.
InitialTuning first_iteration_tuning(const SimulationModel& model, const Vector& observed, const RunConfig& config);

}  // namespace abcdist
