#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "abcdist/model.hpp"
#include "abcdist/rng.hpp"

namespace testing {

using abcdist::RngStream;
using abcdist::Vector;

// s = theta exactly, independent Unif(lo, hi) priors.
class IdentityModel final : public abcdist::SimulationModel {
 public:
  explicit IdentityModel(std::size_t n = 1, double lo = -1.0, double hi = 1.0) : n_(n), lo_(lo), hi_(hi) {}
  std::string_view id() const override { return "identity"; }
  std::size_t n_params() const override { return n_; }
  std::size_t n_summaries() const override { return n_; }
  Vector sample_prior(RngStream& rng) const override {
    Vector t(static_cast<Eigen::Index>(n_));
    for (auto& x : t) x = rng.uniform(lo_, hi_);
    return t;
  }
  double prior_density(const Vector& t) const override {
    for (double x : t)
      if (x < lo_ || x > hi_) return 0.0;
    return std::pow(1.0 / (hi_ - lo_), static_cast<double>(n_));
  }
  std::optional<Vector> simulate(const Vector& t, RngStream&) const override { return t; }

 private:
  std::size_t n_;
  double lo_, hi_;
};

// Counts simulate() calls; optionally returns Incomplete for every k-th call.
class CountingModel final : public abcdist::SimulationModel {
 public:
  CountingModel(const abcdist::SimulationModel& inner, std::size_t incomplete_every = 0)
      : inner_(inner), every_(incomplete_every) {}
  std::string_view id() const override { return inner_.id(); }
  std::size_t n_params() const override { return inner_.n_params(); }
  std::size_t n_summaries() const override { return inner_.n_summaries(); }
  Vector sample_prior(RngStream& rng) const override { return inner_.sample_prior(rng); }
  double prior_density(const Vector& t) const override { return inner_.prior_density(t); }
  std::optional<Vector> simulate(const Vector& t, RngStream& rng) const override {
    const std::size_t c = ++calls;
    auto s = inner_.simulate(t, rng);
    if (every_ && c % every_ == 0) return std::nullopt;
    return s;
  }
  mutable std::size_t calls = 0;

 private:
  const abcdist::SimulationModel& inner_;
  std::size_t every_;
};

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// One-sample statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> a, const std::function<double(double)>& cdf) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Asymptotic critical value at level 0.001: sqrt(-log(0.0005) / 2) * sqrt((n + m) / (n m)).
inline double ks_critical(std::size_t n, std::size_t m) {
  const double c = std::sqrt(-std::log(0.0005) / 2.0);
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}
inline double ks_critical(std::size_t n) { return std::sqrt(-std::log(0.0005) / 2.0) / std::sqrt(static_cast<double>(n)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace testing
