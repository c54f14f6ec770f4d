#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "abcdist/model.hpp"
#include "abcdist/rng.hpp"
#include "abcdist/stats.hpp"
#include "abcdist/types.hpp"

namespace abcdist {

struct Particle {
  Vector theta;
  Vector summary;
  double weight = 1.0;
  std::optional<double> distance;
};

struct ParticlePopulation {
  std::vector<Particle> particles;
  std::size_t iteration = 1;

  std::size_t size() const { return particles.size(); }
  bool empty() const { return particles.empty(); }
  void validate() const;

  WeightedSample weighted_thetas() const;
  std::vector<double> weights() const;
  // max / min importance weight over the population.
  double weight_ratio() const;
};

// Walker/Vose alias table for O(1) categorical draws.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& probabilities);
  std::size_t sample(RngStream& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// The importance density: either the prior, or the mixture
//   q(theta) = sum_i w_i N(theta; theta_i, 2 Sigma)
// over the previous weighted population, Sigma its weighted covariance.
class ImportanceDensity {
 public:
  static constexpr std::size_t kAliasThreshold = 512;

  static ImportanceDensity prior();
  static ImportanceDensity mixture(const ParticlePopulation& pop);

  bool is_prior() const { return std::holds_alternative<PriorTag>(state_); }

  // Mixture accessors; throw on the prior variant.
  const Matrix& centers() const;                         // one center per row
  const std::vector<double>& mixture_weights() const;    // normalised
  const Matrix& kernel_cov() const;                      // 2 * Sigma, unregularised
  const Matrix& kernel_factor() const;                   // Cholesky factor actually used

  // Log density of the mixture at theta.
  double log_density(const Vector& theta) const;
  double density(const Vector& theta) const;

  // Draw from the mixture (or the prior, for the prior variant), ignoring
  // prior support. sample_proposal applies the support rejection.
  Vector draw(const SimulationModel& model, RngStream& rng) const;

 private:
  struct PriorTag {};
  struct Mixture {
    Matrix centers;              // N x n
    std::vector<double> weights;
    std::vector<double> cumulative;
    std::optional<AliasTable> alias;
    Matrix kernel_cov;
    Matrix factor;               // lower Cholesky of (regularised) kernel_cov
    Matrix whitened_centers;     // N x n, rows L^{-1} c_i
    std::vector<double> log_weights;
    double log_norm = 0.0;       // -(n/2) log(2 pi) - log|L|
  };

  explicit ImportanceDensity(std::variant<PriorTag, Mixture> s) : state_(std::move(s)) {}
  const Mixture& mix() const;

  std::variant<PriorTag, Mixture> state_;
};

// Prior when there is no previous population, or at t = 2 after an infinite
// first threshold; otherwise the mixture over `previous`.
ImportanceDensity build_importance_density(const ParticlePopulation* previous, bool h1_was_infinite);

struct Proposal {
  Vector theta;
  std::size_t support_rejections = 0;
};

inline constexpr std::size_t kMaxSupportRejections = 1'000'000;

// Draw from q until the prior density is positive.
Proposal sample_proposal(const ImportanceDensity& q, const SimulationModel& model, RngStream& rng);

// pi(theta) / q(theta); exactly 1 for the prior variant.
double importance_weight(const Vector& theta, const ImportanceDensity& q, const SimulationModel& model);

// Self-normalised sum_i f(theta_i) w_i / sum_i w_i.
Vector posterior_expectation(const ParticlePopulation& pop, const std::function<Vector(const Vector&)>& f);

}  // namespace abcdist
