#pragma once

#include <span>
#include <vector>

#include "abcdist/rng.hpp"
#include "abcdist/types.hpp"

namespace abcdist {

// Parameter vectors with non-negative weights, at least one positive.
struct WeightedSample {
  std::vector<Vector> values;
  std::vector<double> weights;

  void validate() const;
};

struct MeanCov {
  Vector mean;
  Matrix cov;
};

// Median; even-length input averages the two central order statistics.
double median(std::span<const double> values);

// Raw median absolute deviation, no consistency constant.
double mad(std::span<const double> samples);

// Lower empirical quantile: the ceil(alpha * n)-th smallest value.
double empirical_quantile(std::span<const double> values, double alpha);

// ceil(n / alpha), reading alpha as the decimal it was written as.
std::size_t ceil_div_alpha(std::size_t n, double alpha);

// Self-normalised weighted mean and (biased) weighted covariance.
MeanCov weighted_mean_cov(const WeightedSample& sample);

// Draw from N(mean, cov) for any symmetric PSD cov; a zero cov returns mean exactly.
Vector mvn_sample(const Vector& mean, const Matrix& cov, RngStream& rng);

double mvn_density(const Vector& x, const Vector& mean, const Matrix& cov);
double mvn_log_density(const Vector& x, const Vector& mean, const Matrix& cov);

// Lower Cholesky factor of cov. A matrix that is not numerically positive
// definite gets eps * I added, eps = 1e-10 * max(1, trace / n), and is
// factorised again. Throws if that still fails.
Matrix regularized_cholesky(const Matrix& cov);

}  // namespace abcdist
