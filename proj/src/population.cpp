#include "abcdist/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "abcdist/simd/kernels.hpp"

namespace abcdist {

std::vector<std::string> SimulationModel::param_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n_params(); ++i) out.push_back("theta" + std::to_string(i + 1));
  return out;
}

void ParticlePopulation::validate() const {
  if (particles.empty()) throw Error("population is empty");
  const auto n = particles.front().theta.size();
  const auto m = particles.front().summary.size();
  bool any_positive = false;
  for (const auto& p : particles) {
    if (p.theta.size() != n || p.summary.size() != m) throw Error("population: inconsistent dimensions");
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) throw Error("population: invalid importance weight");
    any_positive = any_positive || p.weight > 0.0;
  }
  if (!any_positive) throw Error("population: all importance weights are zero");
}

WeightedSample ParticlePopulation::weighted_thetas() const {
  WeightedSample s;
  s.values.reserve(particles.size());
  s.weights.reserve(particles.size());
  for (const auto& p : particles) {
    s.values.push_back(p.theta);
    s.weights.push_back(p.weight);
  }
  return s;
}

std::vector<double> ParticlePopulation::weights() const {
  std::vector<double> w;
  w.reserve(particles.size());
  for (const auto& p : particles) w.push_back(p.weight);
  return w;
}

double ParticlePopulation::weight_ratio() const {
  if (particles.empty()) throw Error("population is empty");
  const auto [lo, hi] = std::minmax_element(particles.begin(), particles.end(),
                                            [](const Particle& a, const Particle& b) { return a.weight < b.weight; });
  if (lo->weight == 0.0) return std::numeric_limits<double>::infinity();
  return hi->weight / lo->weight;
}

AliasTable::AliasTable(const std::vector<double>& probabilities) {
  const std::size_t n = probabilities.size();
  if (n == 0) throw Error("alias table: no categories");
  double total = 0.0;
  for (double p : probabilities) total += p;
  if (!(total > 0.0)) throw Error("alias table: probabilities sum to zero");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = probabilities[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  // Rounding leftovers; zero-probability categories must stay unreachable.
  const auto heaviest = static_cast<std::size_t>(
      std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
  for (std::size_t i : small) {
    prob_[i] = probabilities[i] > 0.0 ? 1.0 : 0.0;
    alias_[i] = heaviest;
  }
}

std::size_t AliasTable::sample(RngStream& rng) const {
  const double u = rng.uniform() * static_cast<double>(prob_.size());
  const auto column = std::min(static_cast<std::size_t>(u), prob_.size() - 1);
  return (u - static_cast<double>(column)) < prob_[column] ? column : alias_[column];
}

ImportanceDensity ImportanceDensity::prior() { return ImportanceDensity(PriorTag{}); }

ImportanceDensity ImportanceDensity::mixture(const ParticlePopulation& pop) {
  pop.validate();
  const auto count = pop.size();
  const auto n = pop.particles.front().theta.size();

  Mixture mx;
  mx.centers.resize(static_cast<Eigen::Index>(count), n);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mx.centers.row(static_cast<Eigen::Index>(i)) = pop.particles[i].theta.transpose();
    total += pop.particles[i].weight;
  }
  mx.weights.resize(count);
  mx.cumulative.resize(count);
  mx.log_weights.resize(count);
  double running = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mx.weights[i] = pop.particles[i].weight / total;
    running += mx.weights[i];
    mx.cumulative[i] = running;
    mx.log_weights[i] = mx.weights[i] > 0.0 ? std::log(mx.weights[i]) : -std::numeric_limits<double>::infinity();
  }
  if (count >= kAliasThreshold) mx.alias.emplace(mx.weights);

  const MeanCov mc = weighted_mean_cov(pop.weighted_thetas());
  mx.kernel_cov = 2.0 * mc.cov;
  mx.factor = regularized_cholesky(mx.kernel_cov);
  mx.whitened_centers =
      mx.factor.triangularView<Eigen::Lower>().solve(mx.centers.transpose()).transpose();
  mx.log_norm = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) -
                mx.factor.diagonal().array().log().sum();
  return ImportanceDensity(std::move(mx));
}

const ImportanceDensity::Mixture& ImportanceDensity::mix() const {
  if (const auto* m = std::get_if<Mixture>(&state_)) return *m;
  throw Error("importance density is the prior, not a mixture");
}

const Matrix& ImportanceDensity::centers() const { return mix().centers; }
const std::vector<double>& ImportanceDensity::mixture_weights() const { return mix().weights; }
const Matrix& ImportanceDensity::kernel_cov() const { return mix().kernel_cov; }
const Matrix& ImportanceDensity::kernel_factor() const { return mix().factor; }

double ImportanceDensity::log_density(const Vector& theta) const {
  const Mixture& mx = mix();
  const auto n = static_cast<std::size_t>(mx.centers.cols());
  if (static_cast<std::size_t>(theta.size()) != n) throw Error("importance density: dimension mismatch");
  const Vector z = mx.factor.triangularView<Eigen::Lower>().solve(theta);
  const std::vector<double> ones(n, 1.0);
  const auto rows = static_cast<std::size_t>(mx.whitened_centers.rows());
  std::vector<double> d2(rows);
  simd::active_kernels().sq_distances(mx.whitened_centers.data(), rows, rows, n, ones.data(), z.data(), d2.data());

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows; ++i) best = std::max(best, mx.log_weights[i] - 0.5 * d2[i]);
  if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (mx.weights[i] > 0.0) acc += std::exp(mx.log_weights[i] - 0.5 * d2[i] - best);
  }
  return mx.log_norm + best + std::log(acc);
}

double ImportanceDensity::density(const Vector& theta) const { return std::exp(log_density(theta)); }

Vector ImportanceDensity::draw(const SimulationModel& model, RngStream& rng) const {
  if (is_prior()) return model.sample_prior(rng);
  const Mixture& mx = mix();
  std::size_t k;
  if (mx.alias) {
    k = mx.alias->sample(rng);
  } else {
    const double u = rng.uniform();
    k = mx.cumulative.size() - 1;
    for (std::size_t i = 0; i < mx.cumulative.size(); ++i) {
      if (u < mx.cumulative[i]) {
        k = i;
        break;
      }
    }
    while (mx.weights[k] == 0.0 && k > 0) --k;
  }
  Vector eps(mx.centers.cols());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return mx.centers.row(static_cast<Eigen::Index>(k)).transpose() + mx.factor * eps;
}

ImportanceDensity build_importance_density(const ParticlePopulation* previous, bool h1_was_infinite) {
  if (previous == nullptr) return ImportanceDensity::prior();
  if (previous->iteration == 1 && h1_was_infinite) return ImportanceDensity::prior();
  return ImportanceDensity::mixture(*previous);
}

Proposal sample_proposal(const ImportanceDensity& q, const SimulationModel& model, RngStream& rng) {
  Proposal out;
  while (true) {
    Vector theta = q.draw(model, rng);
    if (model.prior_density(theta) > 0.0) {
      out.theta = std::move(theta);
      return out;
    }
    if (++out.support_rejections >= kMaxSupportRejections)
      throw Error("importance density has escaped the prior support (1e6 consecutive rejections)");
  }
}

double importance_weight(const Vector& theta, const ImportanceDensity& q, const SimulationModel& model) {
  const double prior = model.prior_density(theta);
  if (!(prior > 0.0)) throw Error("importance_weight: theta outside prior support");
  if (q.is_prior()) return 1.0;
  const double log_q = q.log_density(theta);
  if (!std::isfinite(log_q)) throw Error("importance_weight: q(theta) = 0 inside prior support");
  const double w = std::exp(std::log(prior) - log_q);
  if (!std::isfinite(w)) throw Error("importance_weight: q(theta) underflows inside prior support");
  return w;
}

Vector posterior_expectation(const ParticlePopulation& pop, const std::function<Vector(const Vector&)>& f) {
  pop.validate();
  double total = 0.0;
  Vector acc;
  for (const auto& p : pop.particles) {
    if (p.weight == 0.0) continue;
    Vector v = f(p.theta);
    if (acc.size() == 0) acc = Vector::Zero(v.size());
    acc += p.weight * v;
    total += p.weight;
  }
  return acc / total;
}

}  // namespace abcdist
