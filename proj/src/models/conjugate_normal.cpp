#include "abcdist/models/normal_toy.hpp"

namespace abcdist {

Vector ConjugateNormalModel::sample_prior(RngStream& rng) const {
  return Vector::Constant(1, rng.normal(0.0, prior_sd));
}

double ConjugateNormalModel::prior_density(const Vector& theta) const { return normal_pdf(theta[0], 0.0, prior_sd); }

std::optional<Vector> ConjugateNormalModel::simulate(const Vector& theta, RngStream& rng) const {
  return Vector::Constant(1, rng.normal(theta[0], noise_sd));
}

}  // namespace abcdist
