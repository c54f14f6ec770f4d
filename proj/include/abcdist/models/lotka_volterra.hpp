#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "abcdist/model.hpp"

namespace abcdist {

struct LvState {
  std::int64_t prey = 0;
  std::int64_t predators = 0;
};

enum class LvEvent { PreyBirth = 0, Predation = 1, PredatorDeath = 2 };

// Hazards (theta1 X1, theta2 X1 X2, theta3 X2).
std::array<double, 3> lv_hazards(const LvState& x, const std::array<double, 3>& rates);

// Apply one transition in place.
void lv_apply(LvState& x, LvEvent e);

struct LvStep {
  double holding_time;  // +inf when every hazard is zero
  LvEvent event;
};
LvStep lv_next_event(const LvState& x, const std::array<double, 3>& rates, RngStream& rng);

// Stochastic predator-prey jump process observed with Gaussian noise.
// Parameters are (log theta1, log theta2, log theta3) with independent
// uniform priors; summaries are X1 at every observation time, then X2 at
// every observation time.
class LotkaVolterraModel final : public SimulationModel {
 public:
  LotkaVolterraModel();

  std::int64_t x1_0 = 50;
  std::int64_t x2_0 = 100;
  std::vector<double> obs_times;
  double obs_noise_sd;
  std::size_t transition_cap = 100'000;
  double log_prior_lo = -6.0;
  double log_prior_hi = 2.0;

  void validate() const;

  std::string_view id() const override { return "lv"; }
  std::size_t n_params() const override { return 3; }
  std::size_t n_summaries() const override { return 2 * obs_times.size(); }
  Vector sample_prior(RngStream& rng) const override;
  double prior_density(const Vector& theta) const override;
  std::optional<Vector> simulate(const Vector& theta, RngStream& rng) const override;
  std::vector<std::string> param_names() const override { return {"log_theta1", "log_theta2", "log_theta3"}; }
};

// Exact Gillespie simulation on the natural rate scale. Each observation
// records the state after the last transition at or before that time; noise
// is added after the trajectory is complete. Returns nullopt once the
// transition cap is hit before the last observation time.
std::optional<Vector> lv_gillespie(const std::array<double, 3>& rates, const LotkaVolterraModel& model, RngStream& rng);

}  // namespace abcdist
