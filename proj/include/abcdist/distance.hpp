#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abcdist/types.hpp"

namespace abcdist {

// Weighted Euclidean distance
//   d(x, y) = sqrt(sum_i (w_i x_i - w_i y_i)^2),
// evaluated in scaled space so that large weights cannot overflow the
// intermediate differences.
class DistanceFunction {
 public:
  DistanceFunction() = default;
  explicit DistanceFunction(std::vector<double> weights);

  static DistanceFunction uniform(std::size_t m);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

  double operator()(const Vector& x, const Vector& y) const;

  // w (*) x
  Vector scale(const Vector& x) const;

  // Distances of every row of `points` (one point per row) to `reference`.
  std::vector<double> distances(const Matrix& points, const Vector& reference) const;

  friend bool operator==(const DistanceFunction&, const DistanceFunction&) = default;

 private:
  std::vector<double> weights_;
};

double weighted_euclidean(const Vector& x, const Vector& y, const DistanceFunction& d);

// w_i = 1 / sigma_i; zero scales give zero weight and are reported.
struct ScaleWeights {
  DistanceFunction distance;
  std::vector<std::size_t> zero_scale_indices;
};
ScaleWeights weights_from_scales(std::span<const double> scales);

// Per-column MAD of `summaries` (one simulation per row).
std::vector<double> column_mads(const Matrix& summaries);

// max / min over strictly positive weights.
double eccentricity_ratio(const DistanceFunction& d);
std::size_t zero_weight_count(const DistanceFunction& d);

// w_i + delta * max_j w_j
DistanceFunction regularize_weights(const DistanceFunction& d, double delta);

struct AcceptanceStage {
  DistanceFunction distance;
  double threshold;  // may be +infinity
};

// Conjunction of (distance, threshold) stages. The region it accepts is the
// intersection of the stage regions, so appending never enlarges it. An empty
// rule accepts everything.
class NestedAcceptanceRule {
 public:
  NestedAcceptanceRule() = default;
  explicit NestedAcceptanceRule(std::vector<AcceptanceStage> stages);

  const std::vector<AcceptanceStage>& stages() const { return stages_; }
  bool empty() const { return stages_.empty(); }
  std::size_t size() const { return stages_.size(); }

  void append(AcceptanceStage stage);
  NestedAcceptanceRule extended(AcceptanceStage stage) const;

 private:
  std::vector<AcceptanceStage> stages_;
};

bool accept(const Vector& s, const Vector& s_obs, const NestedAcceptanceRule& rule);

// A rule bound to one observation, with w (*) s_obs precomputed per stage.
class AcceptanceTest {
 public:
  AcceptanceTest(const NestedAcceptanceRule& rule, const Vector& s_obs);

  bool operator()(const Vector& s) const;

 private:
  struct Bound {
    std::vector<double> weights;
    std::vector<double> scaled_obs;
    double threshold;
    bool unbounded;
  };
  std::vector<Bound> stages_;
  std::size_t dims_;
};

}  // namespace abcdist
