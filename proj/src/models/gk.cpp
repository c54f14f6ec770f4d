#include "abcdist/models/gk.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace abcdist {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double gk_quantile(double x, double A, double B, double g, double k, double c) {
  if (!(x > 0.0 && x < 1.0)) throw Error("gk_quantile: x must lie in (0, 1)");
  const double z = normal_quantile(x);
  // (1 - e^{-gz}) / (1 + e^{-gz}) == tanh(gz / 2), without overflow for large |gz|.
  const double skew = 1.0 + c * std::tanh(0.5 * g * z);
  return A + B * skew * std::pow(1.0 + z * z, k) * z;
}

GkModel::GkModel() {
  for (std::size_t i = 1250; i <= 8750; i += 1250) order_indices.push_back(i);
}

void GkModel::validate() const {
  if (order_indices.empty()) throw Error("gk: order_indices is empty");
  if (dataset_size == 0) throw Error("gk: dataset_size must be positive");
  for (std::size_t j = 0; j < order_indices.size(); ++j) {
    if (order_indices[j] < 1 || order_indices[j] > dataset_size) throw Error("gk: order index out of range");
    if (j > 0 && order_indices[j] <= order_indices[j - 1]) throw Error("gk: order_indices must be strictly increasing");
  }
  if (!(prior_hi > prior_lo)) throw Error("gk: empty prior range");
}

Vector GkModel::sample_prior(RngStream& rng) const {
  Vector theta(4);
  for (Eigen::Index i = 0; i < 4; ++i) theta[i] = rng.uniform(prior_lo, prior_hi);
  return theta;
}

double GkModel::prior_density(const Vector& theta) const {
  for (Eigen::Index i = 0; i < 4; ++i)
    if (!(theta[i] > prior_lo && theta[i] < prior_hi)) return 0.0;
  return std::pow(1.0 / (prior_hi - prior_lo), 4);
}

std::optional<Vector> GkModel::simulate(const Vector& theta, RngStream& rng) const {
  return gk_simulate_order_stats(theta, *this, rng);
}

std::vector<double> uniform_order_statistics(const std::vector<std::size_t>& indices, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(indices.size());
  double prev = 0.0;
  std::size_t prev_index = 0;
  for (std::size_t idx : indices) {
    if (idx <= prev_index || idx > n) throw Error("order statistic indices must be increasing within [1, n]");
    // Given U_(prev_index) = prev, the remaining n - prev_index points are iid
    // uniform on (prev, 1); the next one we want is their (idx - prev_index)-th.
    const double frac = rng.beta(static_cast<double>(idx - prev_index), static_cast<double>(n + 1 - idx));
    prev = prev + (1.0 - prev) * frac;
    prev_index = idx;
    out.push_back(prev);
  }
  return out;
}

Vector gk_simulate_order_stats(const Vector& params, const GkModel& model, RngStream& rng) {
  const auto u = uniform_order_statistics(model.order_indices, model.dataset_size, rng);
  Vector s(static_cast<Eigen::Index>(u.size()));
  for (std::size_t j = 0; j < u.size(); ++j) {
    // Beta draws can round to the closed endpoints in extreme cases.
    const double x = std::clamp(u[j], std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon() / 2);
    s[static_cast<Eigen::Index>(j)] = gk_quantile(x, params[0], params[1], params[2], params[3], model.c);
  }
  return s;
}

}  // namespace abcdist
