#include "abcdist/models/lotka_volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace abcdist {

std::array<double, 3> lv_hazards(const LvState& x, const std::array<double, 3>& rates) {
  const auto x1 = static_cast<double>(x.prey);
  const auto x2 = static_cast<double>(x.predators);
  return {rates[0] * x1, rates[1] * x1 * x2, rates[2] * x2};
}

void lv_apply(LvState& x, LvEvent e) {
  switch (e) {
    case LvEvent::PreyBirth: ++x.prey; break;
    case LvEvent::Predation:
      --x.prey;
      ++x.predators;
      break;
    case LvEvent::PredatorDeath: --x.predators; break;
  }
}

LvStep lv_next_event(const LvState& x, const std::array<double, 3>& rates, RngStream& rng) {
  const auto h = lv_hazards(x, rates);
  const double total = h[0] + h[1] + h[2];
  if (!(total > 0.0)) return {std::numeric_limits<double>::infinity(), LvEvent::PreyBirth};
  const double dt = rng.exponential(total);
  const double u = rng.uniform() * total;
  LvEvent e = LvEvent::PredatorDeath;
  if (u < h[0]) {
    e = LvEvent::PreyBirth;
  } else if (u < h[0] + h[1]) {
    e = LvEvent::Predation;
  }
  // Rounding in the cumulative sums must not pick a zero-hazard event.
  if (e == LvEvent::PredatorDeath && h[2] == 0.0) e = h[1] > 0.0 ? LvEvent::Predation : LvEvent::PreyBirth;
  return {dt, e};
}

LotkaVolterraModel::LotkaVolterraModel() : obs_noise_sd(std::exp(2.3)) {
  for (int t = 2; t <= 32; t += 2) obs_times.push_back(t);
}

void LotkaVolterraModel::validate() const {
  if (x1_0 < 0 || x2_0 < 0) throw Error("lv: initial populations must be non-negative");
  if (obs_times.empty()) throw Error("lv: no observation times");
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    if (!(obs_times[i] >= 0.0)) throw Error("lv: observation times must be non-negative");
    if (i > 0 && obs_times[i] <= obs_times[i - 1]) throw Error("lv: observation times must be increasing");
  }
  if (!(obs_noise_sd >= 0.0)) throw Error("lv: obs_noise_sd must be non-negative");
  if (transition_cap == 0) throw Error("lv: transition_cap must be positive");
  if (!(log_prior_hi > log_prior_lo)) throw Error("lv: empty prior range");
}

Vector LotkaVolterraModel::sample_prior(RngStream& rng) const {
  Vector theta(3);
  for (Eigen::Index i = 0; i < 3; ++i) theta[i] = rng.uniform(log_prior_lo, log_prior_hi);
  return theta;
}

double LotkaVolterraModel::prior_density(const Vector& theta) const {
  for (Eigen::Index i = 0; i < 3; ++i)
    if (!(theta[i] > log_prior_lo && theta[i] < log_prior_hi)) return 0.0;
  return std::pow(1.0 / (log_prior_hi - log_prior_lo), 3);
}

std::optional<Vector> LotkaVolterraModel::simulate(const Vector& theta, RngStream& rng) const {
  return lv_gillespie({std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])}, *this, rng);
}

std::optional<Vector> lv_gillespie(const std::array<double, 3>& rates, const LotkaVolterraModel& model, RngStream& rng) {
  const std::size_t n_obs = model.obs_times.size();
  std::vector<LvState> recorded;
  recorded.reserve(n_obs);
  LvState x{model.x1_0, model.x2_0};
  double t = 0.0;
  std::size_t transitions = 0;
  while (recorded.size() < n_obs) {
    if (transitions >= model.transition_cap) return std::nullopt;
    const LvStep step = lv_next_event(x, rates, rng);
    const double t_next = t + step.holding_time;
    // State x holds on [t, t_next); latch every observation time in that window.
    while (recorded.size() < n_obs && model.obs_times[recorded.size()] < t_next) recorded.push_back(x);
    if (recorded.size() == n_obs) break;
    lv_apply(x, step.event);
    t = t_next;
    ++transitions;
  }
  Vector s(static_cast<Eigen::Index>(2 * n_obs));
  for (std::size_t i = 0; i < n_obs; ++i) {
    s[static_cast<Eigen::Index>(i)] = static_cast<double>(recorded[i].prey) + rng.normal(0.0, model.obs_noise_sd);
  }
  for (std::size_t i = 0; i < n_obs; ++i) {
    s[static_cast<Eigen::Index>(n_obs + i)] =
        static_cast<double>(recorded[i].predators) + rng.normal(0.0, model.obs_noise_sd);
  }
  return s;
}

}  // namespace abcdist
