#include "abcdist/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abcdist/simd/kernels.hpp"
#include "abcdist/stats.hpp"

namespace abcdist {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw Error(std::string("distance: non-finite ") + what);
}

double sq_distance_one(std::span<const double> weights, const Vector& x, std::span<const double> scaled_ref) {
  double out = 0.0;
  simd::active_kernels().sq_distances(x.data(), 1, 1, weights.size(), weights.data(), scaled_ref.data(), &out);
  return out;
}

}  // namespace

DistanceFunction::DistanceFunction(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error("distance function needs at least one weight");
  bool any_positive = false;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw Error("distance weights must be finite and non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw Error("distance function needs a strictly positive weight");
}

DistanceFunction DistanceFunction::uniform(std::size_t m) { return DistanceFunction(std::vector<double>(m, 1.0)); }

Vector DistanceFunction::scale(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != weights_.size()) throw Error("distance: dimension mismatch");
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = weights_[static_cast<std::size_t>(i)] * x[i];
  return out;
}

double DistanceFunction::operator()(const Vector& x, const Vector& y) const {
  if (static_cast<std::size_t>(x.size()) != weights_.size() || x.size() != y.size())
    throw Error("distance: dimension mismatch");
  require_finite(x, "summary");
  require_finite(y, "summary");
  const Vector sy = scale(y);
  return std::sqrt(sq_distance_one(weights_, x, {sy.data(), static_cast<std::size_t>(sy.size())}));
}

std::vector<double> DistanceFunction::distances(const Matrix& points, const Vector& reference) const {
  if (static_cast<std::size_t>(points.cols()) != weights_.size() || reference.size() != points.cols())
    throw Error("distance: dimension mismatch");
  if (!points.allFinite()) throw Error("distance: non-finite summary");
  require_finite(reference, "summary");
  const Vector sref = scale(reference);
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
  const simd::PointBlock block{points.data(), static_cast<std::size_t>(points.rows()),
                               static_cast<std::size_t>(points.rows()), weights_.size()};
  simd::sq_distances(block, weights_, {sref.data(), weights_.size()}, out);
  for (double& v : out) v = std::sqrt(v);
  return out;
}

double weighted_euclidean(const Vector& x, const Vector& y, const DistanceFunction& d) { return d(x, y); }

ScaleWeights weights_from_scales(std::span<const double> scales) {
  if (scales.empty()) throw Error("weights_from_scales: no scales");
  std::vector<double> w(scales.size());
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!std::isfinite(scales[i]) || scales[i] < 0.0) throw Error("weights_from_scales: scales must be finite and non-negative");
    if (scales[i] == 0.0) {
      zeros.push_back(i);
      w[i] = 0.0;
    } else {
      w[i] = 1.0 / scales[i];
    }
  }
  if (zeros.size() == scales.size()) throw Error("weights_from_scales: every scale is zero");
  for (double x : w)
    if (!std::isfinite(x)) throw Error("weights_from_scales: scale too small, weight overflows");
  return {DistanceFunction(std::move(w)), std::move(zeros)};
}

std::vector<double> column_mads(const Matrix& summaries) {
  if (summaries.rows() == 0) throw Error("column_mads: no simulations");
  std::vector<double> out(static_cast<std::size_t>(summaries.cols()));
  for (Eigen::Index j = 0; j < summaries.cols(); ++j)
    out[static_cast<std::size_t>(j)] =
        mad(std::span<const double>(summaries.col(j).data(), static_cast<std::size_t>(summaries.rows())));
  return out;
}

double eccentricity_ratio(const DistanceFunction& d) {
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (double w : d.weights()) {
    if (w <= 0.0) continue;
    hi = std::max(hi, w);
    lo = std::min(lo, w);
  }
  if (hi == 0.0) throw Error("eccentricity_ratio: no positive weight");
  return hi / lo;
}

std::size_t zero_weight_count(const DistanceFunction& d) {
  return static_cast<std::size_t>(std::count(d.weights().begin(), d.weights().end(), 0.0));
}

DistanceFunction regularize_weights(const DistanceFunction& d, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error("regularize_weights: delta must be positive");
  const double floor = delta * *std::max_element(d.weights().begin(), d.weights().end());
  std::vector<double> w = d.weights();
  for (double& x : w) x += floor;
  // max / min <= (1 + delta) / delta holds in exact arithmetic; rounding can
  // overshoot by an ulp, so nudge the small weights up until it holds in
  // floating point too.
  const double bound = (1.0 + delta) / delta;
  const double hi = *std::max_element(w.begin(), w.end());
  for (double& x : w)
    while (hi / x > bound) x = std::nextafter(x, hi);
  return DistanceFunction(std::move(w));
}

NestedAcceptanceRule::NestedAcceptanceRule(std::vector<AcceptanceStage> stages) {
  for (auto& s : stages) append(std::move(s));
}

void NestedAcceptanceRule::append(AcceptanceStage stage) {
  if (std::isnan(stage.threshold) || stage.threshold < 0.0) throw Error("acceptance threshold must be >= 0");
  if (!stages_.empty() && stage.distance.size() != stages_.front().distance.size())
    throw Error("acceptance stages disagree on summary dimension");
  stages_.push_back(std::move(stage));
}

NestedAcceptanceRule NestedAcceptanceRule::extended(AcceptanceStage stage) const {
  NestedAcceptanceRule out = *this;
  out.append(std::move(stage));
  return out;
}

bool accept(const Vector& s, const Vector& s_obs, const NestedAcceptanceRule& rule) {
  return AcceptanceTest(rule, s_obs)(s);
}

AcceptanceTest::AcceptanceTest(const NestedAcceptanceRule& rule, const Vector& s_obs)
    : dims_(static_cast<std::size_t>(s_obs.size())) {
  require_finite(s_obs, "observation");
  for (const auto& st : rule.stages()) {
    if (st.distance.size() != dims_) throw Error("acceptance rule: dimension mismatch with observation");
    const Vector so = st.distance.scale(s_obs);
    const bool unbounded = std::isinf(st.threshold);
    stages_.push_back({st.distance.weights(), std::vector<double>(so.data(), so.data() + so.size()),
                       unbounded ? 0.0 : st.threshold, unbounded});
  }
}

bool AcceptanceTest::operator()(const Vector& s) const {
  if (static_cast<std::size_t>(s.size()) != dims_) throw Error("acceptance: summary dimension mismatch");
  require_finite(s, "summary");
  for (const auto& st : stages_) {
    if (st.unbounded) continue;
    // Same sqrt as DistanceFunction, so accept() agrees with reported distances.
    if (!(std::sqrt(sq_distance_one(st.weights, s, st.scaled_obs)) <= st.threshold)) return false;
  }
  return true;
}

}  // namespace abcdist
