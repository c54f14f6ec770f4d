#pragma once

#include "abcdist/model.hpp"

namespace abcdist {

// theta ~ N(0, prior_sd^2); s1 ~ N(theta, s1_sd^2) informative,
// s2 ~ N(0, s2_sd^2) pure noise.
class NormalToyModel final : public SimulationModel {
 public:
  double prior_sd = 100.0;
  double s1_sd = 0.1;
  double s2_sd = 1.0;

  std::string_view id() const override { return "normal"; }
  std::size_t n_params() const override { return 1; }
  std::size_t n_summaries() const override { return 2; }
  Vector sample_prior(RngStream& rng) const override;
  double prior_density(const Vector& theta) const override;
  std::optional<Vector> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<std::string> param_names() const override { return {"theta"}; }

  Vector default_observed() const { return Vector::Zero(2); }
};

// One-parameter conjugate toy: theta ~ N(0, prior_sd^2), s ~ N(theta, noise_sd^2).
class ConjugateNormalModel final : public SimulationModel {
 public:
  double prior_sd = 1.0;
  double noise_sd = 1.0;

  std::string_view id() const override { return "conjugate-normal"; }
  std::size_t n_params() const override { return 1; }
  std::size_t n_summaries() const override { return 1; }
  Vector sample_prior(RngStream& rng) const override;
  double prior_density(const Vector& theta) const override;
  std::optional<Vector> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<std::string> param_names() const override { return {"theta"}; }
};

double normal_pdf(double x, double mean, double sd);

}  // namespace abcdist
