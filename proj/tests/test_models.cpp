#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "abcdist/models/gk.hpp"
#include "abcdist/models/lotka_volterra.hpp"
#include "abcdist/models/normal_toy.hpp"
#include "abcdist/models/observed.hpp"
#include "test_support.hpp"

using namespace abcdist;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Incomplete on the first `failures` calls, then the identity.
class FlakyModel final : public SimulationModel {
 public:
  explicit FlakyModel(std::size_t failures) : failures_(failures) {}
  std::string_view id() const override { return "flaky"; }
  std::size_t n_params() const override { return 1; }
  std::size_t n_summaries() const override { return 1; }
  Vector sample_prior(RngStream& rng) const override { return Vector::Constant(1, rng.uniform()); }
  double prior_density(const Vector&) const override { return 1.0; }
  std::optional<Vector> simulate(const Vector& t, RngStream&) const override {
    if (calls_++ < failures_) return std::nullopt;
    return t;
  }

 private:
  std::size_t failures_;
  mutable std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("normal toy summaries") {
  NormalToyModel model;
  CHECK(model.n_params() == 1);
  CHECK(model.n_summaries() == 2);
  CHECK(model.default_observed() == Vector::Zero(2));
  RngStream rng(401);
  std::vector<double> s1, s2a, s2b;
  for (int i = 0; i < 100000; ++i) s1.push_back((*model.simulate(Vector::Constant(1, 5.0), rng))[0]);
  CHECK(std::abs(mean_of(s1) - 5.0) < 0.002);
  CHECK(std::abs(sd_of(s1) / 0.1 - 1.0) < 0.02);
  for (int i = 0; i < 20000; ++i) {
    s2a.push_back((*model.simulate(Vector::Constant(1, 0.0), rng))[1]);
    s2b.push_back((*model.simulate(Vector::Constant(1, 1000.0), rng))[1]);
  }
  CHECK(testing::ks_statistic(s2a, s2b) < testing::ks_critical(s2a.size(), s2b.size()));
  CHECK(model.prior_density(Vector::Constant(1, 0.0)) == doctest::Approx(normal_pdf(0, 0, 100)));
}

TEST_CASE("gk_quantile examples") {
  CHECK(gk_quantile(0.5, 3, 1, 1.5, 0.5) == 3.0);
  CHECK(gk_quantile(0.975, 0, 1, 0, 0) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::abs(normal_quantile(1e-10) + 6.361340902404056) < 1e-9);
  CHECK_THROWS_AS(gk_quantile(0.0, 0, 1, 0, 0), Error);
  CHECK_THROWS_AS(gk_quantile(1.0, 0, 1, 0, 0), Error);
}

TEST_CASE("gk_quantile reduces to A + B z when g = k = 0") {
  RngStream rng(402);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(1e-6, 1 - 1e-6), A = rng.uniform(-5, 5), B = rng.uniform(0.1, 10);
    const double expected = A + B * normal_quantile(x);
    CHECK(gk_quantile(x, A, B, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("gk_quantile is strictly increasing across the prior") {
  RngStream rng(403);
  for (int p = 0; p < 100; ++p) {
    const double A = rng.uniform(0, 10), B = rng.uniform(0, 10), g = rng.uniform(0, 10), k = rng.uniform(0, 10);
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const double q = gk_quantile((i + 0.5) / 1000.0, A, B, g, k);
      REQUIRE(q > prev);
      prev = q;
    }
  }
}

TEST_CASE("gk model defaults and validation") {
  GkModel m;
  CHECK(m.order_indices == std::vector<std::size_t>{1250, 2500, 3750, 5000, 6250, 7500, 8750});
  CHECK(m.dataset_size == 10000);
  CHECK(m.c == 0.8);
  CHECK(m.n_summaries() == 7);
  Vector truth(4);
  truth << 3, 1, 1.5, 0.5;
  CHECK(m.prior_density(truth) == doctest::Approx(1e-4));
  truth[2] = 10.5;
  CHECK(m.prior_density(truth) == 0.0);
  m.order_indices = {5, 5};
  CHECK_THROWS_AS(m.validate(), Error);
  m.order_indices = {0, 5};
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("g-and-k summaries are sorted order statistics") {
  GkModel m;
  RngStream rng(404);
  for (int i = 0; i < 2000; ++i) {
    const Vector th = m.sample_prior(rng);
    const Vector s = *m.simulate(th, rng);
    REQUIRE(s.size() == 7);
    for (Eigen::Index j = 1; j < s.size(); ++j) CHECK(s[j] >= s[j - 1]);
  }
}

TEST_CASE("uniform order statistic marginal matches its beta law") {
  RngStream rng(405);
  std::vector<double> u;
  for (int i = 0; i < 10000; ++i) u.push_back(uniform_order_statistics({1250, 2500, 5000}, 10000, rng)[1]);
  const double a = 2500, b = 7501;
  const double mean = a / (a + b);
  const double se = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)) / 10000.0);
  CHECK(std::abs(mean_of(u) - mean) < 3 * se);
}

TEST_CASE("fast order statistics match sorting a full sample") {
  RngStream rng(406);
  const std::vector<std::size_t> idx{5, 10, 15};
  const int draws = 10000;
  std::vector<std::vector<double>> fast(3), slow(3);
  int fast_joint = 0, slow_joint = 0;
  for (int i = 0; i < draws; ++i) {
    const auto f = uniform_order_statistics(idx, 20, rng);
    std::vector<double> x(20);
    for (auto& v : x) v = rng.uniform();
    std::sort(x.begin(), x.end());
    for (std::size_t j = 0; j < 3; ++j) {
      fast[j].push_back(f[j]);
      slow[j].push_back(x[idx[j] - 1]);
    }
    fast_joint += f[0] < 0.2 && f[2] > 0.8;
    slow_joint += x[4] < 0.2 && x[14] > 0.8;
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(testing::ks_statistic(fast[j], slow[j]) < testing::ks_critical(draws, draws));
  const double p = 0.5 * (fast_joint + slow_joint) / draws;
  CHECK(std::abs(fast_joint - slow_joint) / double(draws) < 4 * std::sqrt(2 * p * (1 - p) / draws) + 1e-3);
  CHECK_THROWS_AS(uniform_order_statistics({10, 5}, 20, rng), Error);
  CHECK_THROWS_AS(uniform_order_statistics({21}, 20, rng), Error);
}

TEST_CASE("Lotka-Volterra hazards at the initial state") {
  const LvState x{50, 100};
  const std::array<double, 3> rates{1, 0.005, 0.6};
  const auto h = lv_hazards(x, rates);
  CHECK(h[0] == 50.0);
  CHECK(h[1] == doctest::Approx(25.0).epsilon(1e-15));
  CHECK(h[2] == doctest::Approx(60.0).epsilon(1e-15));
  CHECK(h[0] + h[1] + h[2] == doctest::Approx(135.0).epsilon(1e-15));

  RngStream rng(407);
  const int n = 60000;
  std::array<int, 3> counts{};
  std::vector<double> holds;
  for (int i = 0; i < n; ++i) {
    const auto step = lv_next_event(x, rates, rng);
    ++counts[static_cast<std::size_t>(step.event)];
    holds.push_back(step.holding_time);
  }
  const std::array<double, 3> p{50.0 / 135, 25.0 / 135, 60.0 / 135};
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(std::abs(counts[k] / double(n) - p[k]) < 4 * std::sqrt(p[k] * (1 - p[k]) / n));
  CHECK(testing::ks_statistic(holds, [](double t) { return 1 - std::exp(-135 * t); }) < testing::ks_critical(holds.size()));
}

TEST_CASE("Lotka-Volterra transitions conserve counts") {
  LvState x{5, 7};
  lv_apply(x, LvEvent::Predation);
  CHECK(x.prey == 4);
  CHECK(x.predators == 8);
  lv_apply(x, LvEvent::PreyBirth);
  CHECK(x.prey == 5);
  lv_apply(x, LvEvent::PredatorDeath);
  CHECK(x.predators == 7);
  RngStream rng(408);
  const auto step = lv_next_event(LvState{0, 0}, {1, 1, 1}, rng);
  CHECK(std::isinf(step.holding_time));
}

TEST_CASE("prey extinction leaves only predator deaths") {
  LotkaVolterraModel m;
  m.x1_0 = 0;
  m.obs_noise_sd = 0.0;
  RngStream rng(409);
  for (int i = 0; i < 50; ++i) {
    const auto s = lv_gillespie({1, 0.005, 0.6}, m, rng);
    REQUIRE(s);
    for (int j = 0; j < 16; ++j) CHECK((*s)[j] == 0.0);
    for (int j = 17; j < 32; ++j) CHECK((*s)[j] <= (*s)[j - 1]);
    CHECK((*s)[31] == 0.0);
  }
}

TEST_CASE("pure birth moment when predation is switched off") {
  LotkaVolterraModel m;
  m.obs_times = {1.0};
  m.obs_noise_sd = 0.0;
  RngStream rng(410);
  std::vector<double> x1;
  for (int i = 0; i < 10000; ++i) x1.push_back((*lv_gillespie({0.5, 0.0, 0.6}, m, rng))[0]);
  const double expected = 50 * std::exp(0.5);
  CHECK(std::abs(mean_of(x1) - expected) < 3 * sd_of(x1) / std::sqrt(10000.0));
}

TEST_CASE("Lotka-Volterra model contract") {
  LotkaVolterraModel m;
  CHECK(m.n_params() == 3);
  CHECK(m.n_summaries() == 32);
  CHECK(m.obs_times.front() == 2.0);
  CHECK(m.obs_times.back() == 32.0);
  CHECK(m.obs_noise_sd == std::exp(2.3));
  CHECK(m.transition_cap == 100000);
  RngStream rng(411);
  LotkaVolterraModel quiet = m;
  quiet.obs_noise_sd = 0.0;
  std::size_t incomplete = 0;
  for (int i = 0; i < 300; ++i) {
    const auto s = quiet.simulate(quiet.sample_prior(rng), rng);
    if (!s) {
      ++incomplete;
      continue;
    }
    REQUIRE(s->size() == 32);
    CHECK(s->minCoeff() >= 0.0);
  }
  CHECK(incomplete < 300);
  LotkaVolterraModel capped = m;
  capped.transition_cap = 10;
  Vector truth(3);
  truth << 0, std::log(0.005), std::log(0.6);
  CHECK_FALSE(capped.simulate(truth, rng).has_value());
  CHECK(m.prior_density(truth) == doctest::Approx(1.0 / 512));
}

TEST_CASE("observation latching is right-continuous") {
  // Prey birth at rate 1 from one prey, no predators: record at t = 2 the
  // state after every event at or before 2. A direct replay of the same
  // stream gives the reference.
  LotkaVolterraModel m;
  m.x1_0 = 1;
  m.x2_0 = 0;
  m.obs_times = {2.0};
  m.obs_noise_sd = 0.0;
  RngStream a(412), b(412);
  for (int i = 0; i < 200; ++i) {
    const auto s = lv_gillespie({1.0, 0.0, 0.0}, m, a);
    LvState x{1, 0};
    double t = 0.0;
    while (true) {
      const auto step = lv_next_event(x, {1.0, 0.0, 0.0}, b);
      if (t + step.holding_time > 2.0) break;
      t += step.holding_time;
      lv_apply(x, step.event);
    }
    b.normal(0.0, 0.0);  // noise draws
    b.normal(0.0, 0.0);
    CHECK((*s)[0] == static_cast<double>(x.prey));
  }
}

TEST_CASE("make_observed_dataset") {
  LotkaVolterraModel lv;
  Vector truth(3);
  truth << std::log(1.0), std::log(0.005), std::log(0.6);
  CHECK(truth[1] == doctest::Approx(-5.30).epsilon(1e-3));
  CHECK(truth[2] == doctest::Approx(-0.51).epsilon(1e-2));
  const auto d1 = make_observed_dataset(lv, truth, 9);
  const auto d2 = make_observed_dataset(lv, truth, 9);
  CHECK(d1.values == d2.values);
  CHECK(d1.values.size() == 32);
  CHECK(*d1.truth == truth);
  CHECK(d1.seed == 9);

  NormalToyModel nt;
  const auto d = make_observed_dataset(nt, Vector::Constant(1, 3.0), 1);
  CHECK(std::abs(d.values[0] - 3.0) < 0.5);

  const auto prior = make_observed_dataset(nt, std::nullopt, 4);
  REQUIRE(prior.truth);
  CHECK(std::abs(prior.values[0] - (*prior.truth)[0]) < 0.5);

  FlakyModel flaky(2);
  const auto f = make_observed_dataset(flaky, Vector::Constant(1, 0.5), 3);
  CHECK(f.attempts == 3);
  CHECK(f.values[0] == 0.5);
  FlakyModel broken(100000);
  CHECK_THROWS_AS(make_observed_dataset(broken, Vector::Constant(1, 0.5), 3, 10), Error);
  CHECK_THROWS_AS(make_observed_dataset(lv, Vector::Constant(3, 5.0), 3), Error);
}
