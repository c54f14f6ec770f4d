#pragma once

#include <vector>

#include "abcdist/model.hpp"

namespace abcdist {

// Standard normal quantile function.
double normal_quantile(double p);

// g-and-k quantile function:
//   A + B [1 + c (1 - e^{-g z}) / (1 + e^{-g z})] (1 + z^2)^k z,   z = Phi^{-1}(x).
double gk_quantile(double x, double A, double B, double g, double k, double c = 0.8);

// Parameters (A, B, g, k) with independent Unif(0, 10) priors. Summaries are
// the order statistics at `order_indices` (1-based) of a dataset of
// `dataset_size` iid draws, simulated without generating the dataset.
class GkModel final : public SimulationModel {
 public:
  GkModel();

  double c = 0.8;
  std::vector<std::size_t> order_indices;
  std::size_t dataset_size = 10'000;
  double prior_lo = 0.0;
  double prior_hi = 10.0;

  void validate() const;

  std::string_view id() const override { return "gk"; }
  std::size_t n_params() const override { return 4; }
  std::size_t n_summaries() const override { return order_indices.size(); }
  Vector sample_prior(RngStream& rng) const override;
  double prior_density(const Vector& theta) const override;
  std::optional<Vector> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<std::string> param_names() const override { return {"A", "B", "g", "k"}; }
};

// Joint draw of uniform order statistics U_(i) for the given increasing
// 1-based indices out of n, by sequential beta spacings.
std::vector<double> uniform_order_statistics(const std::vector<std::size_t>& indices, std::size_t n, RngStream& rng);

Vector gk_simulate_order_stats(const Vector& params, const GkModel& model, RngStream& rng);

}  // namespace abcdist
