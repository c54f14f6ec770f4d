#include "abcdist/models/normal_toy.hpp"

#include <cmath>
#include <numbers>

namespace abcdist {

double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

Vector NormalToyModel::sample_prior(RngStream& rng) const { return Vector::Constant(1, rng.normal(0.0, prior_sd)); }

double NormalToyModel::prior_density(const Vector& theta) const { return normal_pdf(theta[0], 0.0, prior_sd); }

std::optional<Vector> NormalToyModel::simulate(const Vector& theta, RngStream& rng) const {
  Vector s(2);
  s[0] = rng.normal(theta[0], s1_sd);
  s[1] = rng.normal(0.0, s2_sd);
  return s;
}

}  // namespace abcdist
