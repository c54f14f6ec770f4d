#include "abcdist/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace abcdist {

void WeightedSample::validate() const {
  if (values.empty()) throw Error("weighted sample is empty");
  if (values.size() != weights.size()) throw Error("weighted sample: values/weights count mismatch");
  const auto dim = values.front().size();
  bool any_positive = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != dim) throw Error("weighted sample: inconsistent dimensions");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw Error("weighted sample: weights must be finite and non-negative");
    any_positive = any_positive || weights[i] > 0.0;
  }
  if (!any_positive) throw Error("weighted sample: all weights are zero");
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error("median of empty input");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), mid);
  return (lower + upper) / 2.0;
}

double mad(std::span<const double> samples) {
  if (samples.empty()) throw Error("mad of empty input");
  for (double x : samples)
    if (!std::isfinite(x)) throw Error("mad: non-finite value");
  const double m = median(samples);
  std::vector<double> dev(samples.size());
  std::transform(samples.begin(), samples.end(), dev.begin(), [m](double x) { return std::abs(x - m); });
  return median(dev);
}

double empirical_quantile(std::span<const double> values, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("empirical_quantile: alpha must lie in (0, 1]");
  if (values.empty()) throw Error("empirical_quantile of empty input");
  const std::size_t n = values.size();
  auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<double> v(values.begin(), values.end());
  const auto kth = v.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(v.begin(), kth, v.end());
  return *kth;
}

std::size_t ceil_div_alpha(std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must lie in (0, 1]");
  // alpha is usually a decimal like 0.3 or 0.29 that binary cannot hold
  // exactly; a quotient within rounding noise of an integer is that integer.
  const double q = static_cast<double>(n) / alpha;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * r) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(q));
}

MeanCov weighted_mean_cov(const WeightedSample& sample) {
  sample.validate();
  const auto dim = sample.values.front().size();
  double total = 0.0;
  for (double w : sample.weights) total += w;

  Vector mean = Vector::Zero(dim);
  for (std::size_t i = 0; i < sample.values.size(); ++i) mean += sample.weights[i] * sample.values[i];
  mean /= total;

  Matrix cov = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < sample.values.size(); ++i) {
    if (sample.weights[i] == 0.0) continue;
    const Vector d = sample.values[i] - mean;
    cov.noalias() += sample.weights[i] * d * d.transpose();
  }
  cov /= total;
  // Exact symmetry regardless of summation order.
  cov = (0.5 * (cov + cov.transpose())).eval();
  return {std::move(mean), std::move(cov)};
}

namespace {

void check_square(const Vector& mean, const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size())
    throw Error("mvn: mean/covariance dimension mismatch");
}

}  // namespace

Vector mvn_sample(const Vector& mean, const Matrix& cov, RngStream& rng) {
  check_square(mean, cov);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("mvn_sample: eigendecomposition failed");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + eig.eigenvectors() * root.cwiseProduct(z);
}

Matrix regularized_cholesky(const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) throw Error("cholesky: matrix must be square and non-empty");
  auto try_factor = [](const Matrix& a, Matrix& out) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return false;
    out = llt.matrixL();
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      if (!(out(i, i) > 0.0) || !std::isfinite(out(i, i))) return false;
    return true;
  };
  Matrix l;
  if (try_factor(cov, l)) return l;
  const double n = static_cast<double>(cov.rows());
  const double eps = 1e-10 * std::max(1.0, cov.trace() / n);
  Matrix reg = cov;
  reg.diagonal().array() += eps;
  if (try_factor(reg, l)) return l;
  throw Error("covariance is singular even after regularisation");
}

double mvn_log_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  check_square(mean, cov);
  if (x.size() != mean.size()) throw Error("mvn_density: point dimension mismatch");
  const Matrix l = regularized_cholesky(cov);
  const Vector z = l.triangularView<Eigen::Lower>().solve(x - mean);
  const double n = static_cast<double>(x.size());
  return -0.5 * z.squaredNorm() - l.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double mvn_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  return std::exp(mvn_log_density(x, mean, cov));
}

}  // namespace abcdist
