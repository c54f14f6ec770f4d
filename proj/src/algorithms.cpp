#include "abcdist/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "abcdist/simd/kernels.hpp"
#include "abcdist/stats.hpp"
#include "engine.hpp"

namespace abcdist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Substream index for per-iteration randomness that is not simulation
// (tie-breaking); worker substreams use 0..k-1.
constexpr std::uint64_t kSelectionStream = 0xFFFF'FFFFull;

using detail::CandidateSource;
using detail::IterationDraws;

RngStream iteration_stream(std::uint64_t seed, std::size_t t) { return RngStream(seed).fork(t); }

RunRecord make_record(Algorithm a, const SimulationModel& model, const Vector& observed, const RunConfig& config) {
  if (static_cast<std::size_t>(observed.size()) != model.n_summaries())
    throw Error("observed summaries have the wrong dimension for the model");
  RunRecord r;
  r.algorithm = a;
  r.model_id = std::string(model.id());
  r.config = config;
  r.observed = observed;
  r.simd_isa = std::string(simd::isa_name(simd::active_kernels().isa));
  return r;
}

struct Adapted {
  DistanceFunction distance;
  std::vector<std::size_t> zero_scales;
};

// MAD scales of the stored simulations -> weights (-> optional regularisation).
Adapted adapt_distance(const Matrix& store, const RunConfig& config, std::size_t t, std::vector<std::string>& notes) {
  if (store.rows() == 0) throw Error("no complete simulations to estimate scales from");
  const auto mads = column_mads(store);
  ScaleWeights sw = weights_from_scales(mads);
  if (!sw.zero_scale_indices.empty()) {
    std::string msg = "iteration " + std::to_string(t) + ": zero MAD for summaries";
    for (auto i : sw.zero_scale_indices) msg += " " + std::to_string(i + 1);
    msg += "; weight set to 0";
    notes.push_back(std::move(msg));
  }
  DistanceFunction d = config.delta ? regularize_weights(sw.distance, *config.delta) : std::move(sw.distance);
  return {std::move(d), std::move(sw.zero_scale_indices)};
}

std::vector<Particle> to_particles(std::vector<detail::Candidate>&& accepted) {
  std::vector<Particle> out;
  out.reserve(accepted.size());
  for (auto& c : accepted) out.push_back(Particle{std::move(c.theta), std::move(*c.summary), 1.0, std::nullopt});
  return out;
}

Matrix summary_matrix(const std::vector<Particle>& ps, std::size_t m) {
  Matrix s(static_cast<Eigen::Index>(ps.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < ps.size(); ++i) s.row(static_cast<Eigen::Index>(i)) = ps[i].summary.transpose();
  return s;
}

void assign_distances(std::vector<Particle>& ps, const DistanceFunction& d, const Vector& observed) {
  if (ps.empty()) return;
  const auto dist = d.distances(summary_matrix(ps, d.size()), observed);
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].distance = dist[i];
}

std::vector<double> distances_of(const std::vector<Particle>& ps) {
  std::vector<double> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(*p.distance);
  return out;
}

void assign_weights(std::vector<Particle>& ps, const ImportanceDensity& q, const SimulationModel& model) {
  for (auto& p : ps) p.weight = importance_weight(p.theta, q, model);
}

// Budget bookkeeping shared by the iterative algorithms.
struct BudgetLedger {
  std::size_t remaining;
  std::size_t used = 0;
};

// Records the outcome of an incomplete iteration and says why the run ends.
void close_partial(RunRecord& record, const IterationDraws& draws, std::size_t simulated) {
  record.partial_iteration_simulations = simulated;
  record.termination = simulated == 0 ? Termination::BudgetExhausted : Termination::PartialIteration;
  if (simulated > 0)
    record.notes.push_back("partial iteration discarded after " + std::to_string(simulated) + " simulations (" +
                           std::to_string(draws.accepted.size()) + " acceptances)");
}

void finish_iteration(RunRecord& record, IterationRecord&& it, const IterationDraws& draws,
                      const CandidateSource& source, BudgetLedger& ledger) {
  it.simulations = source.simulated();
  it.incomplete = draws.incomplete;
  it.support_rejections = source.support_rejections();
  ledger.used += it.simulations;
  it.cumulative_simulations = ledger.used;
  it.population.iteration = it.t;
  it.importance_weight_ratio = it.population.weight_ratio();
  it.eccentricity = eccentricity_ratio(DistanceFunction(it.weights));
  record.iterations.push_back(std::move(it));
}

}  // namespace

void RunConfig::validate() const {
  if (N == 0) throw Error("N must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1): alpha < 1 is assumed throughout");
  if (budget < N) throw Error("budget must be at least N");
  if (scale_store_cap == 0) throw Error("scale_store_cap must be positive");
  if (delta && !(*delta > 0.0 && std::isfinite(*delta))) throw Error("delta must be a positive real");
  if (workers == 0) throw Error("workers must be at least 1");
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Rejection: return "rejection";
    case Algorithm::Importance: return "importance";
    case Algorithm::Pmc: return "pmc";
    case Algorithm::PmcAdaptPrev: return "pmc-adapt-prev";
    case Algorithm::PmcAdaptCurr: return "pmc-adapt-curr";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::Rejection, Algorithm::Importance, Algorithm::Pmc, Algorithm::PmcAdaptPrev,
                 Algorithm::PmcAdaptCurr})
    if (algorithm_name(a) == name) return a;
  throw Error("unknown algorithm '" + std::string(name) + "'");
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::PartialIteration: return "partial_iteration";
    case Termination::ScheduleExhausted: return "schedule_exhausted";
  }
  return "unknown";
}

Termination parse_termination(std::string_view name) {
  for (auto t : {Termination::Completed, Termination::BudgetExhausted, Termination::PartialIteration,
                 Termination::ScheduleExhausted})
    if (termination_name(t) == name) return t;
  throw Error("unknown termination reason '" + std::string(name) + "'");
}

const IterationRecord& RunRecord::final_iteration() const {
  if (iterations.empty()) throw Error("run has no completed iteration");
  return iterations.back();
}

RejectionResult abc_rejection(const SimulationModel& model, const Vector& observed, std::size_t N,
                              RejectionThreshold threshold, std::optional<DistanceFunction> distance,
                              std::uint64_t seed) {
  if (N == 0) throw Error("abc_rejection: N must be at least 1");
  if (const auto* tk = std::get_if<TopK>(&threshold); tk && (tk->k == 0 || tk->k > N))
    throw Error("abc_rejection: top-k requires 1 <= k <= N");
  RunConfig cfg;
  cfg.N = N;
  cfg.budget = N;
  cfg.seed = seed;
  cfg.scale_store_cap = N;
  RunRecord record = make_record(Algorithm::Rejection, model, observed, cfg);

  const ImportanceDensity q = ImportanceDensity::prior();
  CandidateSource source(model, q, iteration_stream(seed, 1), 1);
  std::size_t remaining = N;
  IterationDraws draws = detail::draw_until(source, AcceptanceTest({}, observed), N, remaining, N, model.n_summaries());

  IterationRecord it;
  it.t = 1;
  std::vector<Particle> all = to_particles(std::move(draws.accepted));
  if (!distance) {
    Adapted a = adapt_distance(draws.scale_store, cfg, 1, record.notes);
    distance = std::move(a.distance);
    it.zero_scale_indices = std::move(a.zero_scales);
  }
  assign_distances(all, *distance, observed);

  double h;
  std::vector<Particle> kept;
  if (const auto* tk = std::get_if<TopK>(&threshold)) {
    if (tk->k > all.size()) throw Error("abc_rejection: fewer complete simulations than k");
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *all[a].distance < *all[b].distance; });
    order.resize(tk->k);
    h = *all[order.back()].distance;
    for (auto i : order) kept.push_back(all[i]);
  } else {
    h = std::get<double>(threshold);
    for (auto& p : all)
      if (*p.distance <= h) kept.push_back(std::move(p));
    if (kept.empty()) record.notes.push_back("no simulation within threshold; empty result");
  }

  it.population.particles = std::move(kept);
  it.population.iteration = 1;
  it.weights = distance->weights();
  it.threshold = h;
  if (!std::isinf(h)) it.region.append({*distance, h});
  it.simulations = source.simulated();
  it.cumulative_simulations = it.simulations;
  it.acceptances = it.population.size();
  it.incomplete = draws.incomplete;
  it.support_rejections = source.support_rejections();
  it.importance_weight_ratio = 1.0;
  it.eccentricity = eccentricity_ratio(*distance);
  record.total_simulations = it.simulations;
  record.termination = Termination::Completed;

  RejectionResult out;
  out.accepted = it.population;
  record.iterations.push_back(std::move(it));
  out.record = std::move(record);
  return out;
}

ParticlePopulation abc_importance(const SimulationModel& model, const Vector& observed, const ImportanceDensity& q,
                                  const NestedAcceptanceRule& rule, std::size_t N, std::uint64_t seed) {
  if (N == 0) throw Error("abc_importance: N must be at least 1");
  CandidateSource source(model, q, iteration_stream(seed, 1), 1);
  const AcceptanceTest test(rule, observed);
  ParticlePopulation out;
  out.iteration = 1;
  std::size_t remaining = N;
  while (auto c = source.next(remaining)) {
    if (!c->summary || !test(*c->summary)) continue;
    Particle p{std::move(c->theta), std::move(*c->summary), 1.0, std::nullopt};
    p.weight = importance_weight(p.theta, q, model);
    if (!rule.empty()) p.distance = rule.stages().back().distance(p.summary, observed);
    out.particles.push_back(std::move(p));
  }
  return out;
}

RunRecord abc_pmc(const SimulationModel& model, const Vector& observed, const RunConfig& config,
                  const PmcOptions& options) {
  config.validate();
  RunRecord record = make_record(Algorithm::Pmc, model, observed, config);
  const std::size_t m = model.n_summaries();

  std::optional<DistanceFunction> d;
  double h1 = kInf;
  bool adapt_first = options.adapt_initial_distance;
  if (options.tuning) {
    d = options.tuning->distance;
    h1 = options.tuning->h1;
    adapt_first = false;
  } else if (options.fixed_schedule) {
    if (options.fixed_schedule->empty()) throw Error("fixed threshold schedule is empty");
    h1 = options.fixed_schedule->front();
  }
  if (adapt_first && !std::isinf(h1))
    throw Error("adaptive initial distance needs h1 = infinity (no distance exists before iteration 1)");
  if (!adapt_first && !d) d = DistanceFunction::uniform(m);
  if (d && d->size() != m) throw Error("initial distance has the wrong dimension");

  BudgetLedger ledger{config.budget};
  double next_h = kInf;
  for (std::size_t t = 1;; ++t) {
    double h_t;
    if (t == 1) {
      h_t = h1;
    } else if (options.fixed_schedule && !options.tuning) {
      if (t > options.fixed_schedule->size()) {
        record.termination = Termination::ScheduleExhausted;
        break;
      }
      h_t = (*options.fixed_schedule)[t - 1];
    } else {
      h_t = next_h;
    }

    const ParticlePopulation* prev = record.iterations.empty() ? nullptr : &record.iterations.back().population;
    const ImportanceDensity q = build_importance_density(prev, std::isinf(h1));
    NestedAcceptanceRule rule;
    if (!std::isinf(h_t)) rule.append({*d, h_t});

    CandidateSource source(model, q, iteration_stream(config.seed, t), config.workers);
    IterationDraws draws = detail::draw_until(source, AcceptanceTest(rule, observed), config.N, ledger.remaining,
                                              config.scale_store_cap, m);
    if (!draws.complete) {
      close_partial(record, draws, source.simulated());
      ledger.used += source.simulated();
      break;
    }

    IterationRecord it;
    it.t = t;
    it.acceptances = draws.accepted.size();
    if (!d) {
      Adapted a = adapt_distance(draws.scale_store, config, t, record.notes);
      d = std::move(a.distance);
      it.zero_scale_indices = std::move(a.zero_scales);
    }
    std::vector<Particle> ps = to_particles(std::move(draws.accepted));
    assign_distances(ps, *d, observed);
    assign_weights(ps, q, model);
    next_h = empirical_quantile(distances_of(ps), config.alpha);

    it.population.particles = std::move(ps);
    it.weights = d->weights();
    it.threshold = next_h;
    it.region = std::move(rule);
    finish_iteration(record, std::move(it), draws, source, ledger);
  }
  record.total_simulations = ledger.used;
  return record;
}

RunRecord abc_pmc_adapt_prev(const SimulationModel& model, const Vector& observed, const RunConfig& config,
                             const std::optional<InitialTuning>& tuning) {
  config.validate();
  RunRecord record = make_record(Algorithm::PmcAdaptPrev, model, observed, config);
  const std::size_t m = model.n_summaries();

  NestedAcceptanceRule rule;
  bool h1_infinite = true;
  if (tuning) {
    if (tuning->distance.size() != m) throw Error("initial distance has the wrong dimension");
    if (!std::isinf(tuning->h1)) {
      rule.append({tuning->distance, tuning->h1});
      h1_infinite = false;
    }
  }

  BudgetLedger ledger{config.budget};
  for (std::size_t t = 1;; ++t) {
    const ParticlePopulation* prev = record.iterations.empty() ? nullptr : &record.iterations.back().population;
    const ImportanceDensity q = build_importance_density(prev, h1_infinite);

    CandidateSource source(model, q, iteration_stream(config.seed, t), config.workers);
    IterationDraws draws = detail::draw_until(source, AcceptanceTest(rule, observed), config.N, ledger.remaining,
                                              config.scale_store_cap, m);
    if (!draws.complete) {
      close_partial(record, draws, source.simulated());
      ledger.used += source.simulated();
      break;
    }

    IterationRecord it;
    it.t = t;
    it.acceptances = draws.accepted.size();
    // Scales from every complete simulation of this iteration, accepted or not.
    Adapted next = adapt_distance(draws.scale_store, config, t, record.notes);
    it.zero_scale_indices = std::move(next.zero_scales);
    std::vector<Particle> ps = to_particles(std::move(draws.accepted));
    assign_distances(ps, next.distance, observed);
    assign_weights(ps, q, model);
    const double next_h = empirical_quantile(distances_of(ps), config.alpha);

    it.population.particles = std::move(ps);
    it.weights = next.distance.weights();
    it.threshold = next_h;
    it.region = rule;
    rule.append({std::move(next.distance), next_h});
    finish_iteration(record, std::move(it), draws, source, ledger);
  }
  record.total_simulations = ledger.used;
  return record;
}

namespace {

RunRecord adapt_curr_impl(const SimulationModel& model, const Vector& observed, const RunConfig& config,
                          std::size_t max_iterations) {
  config.validate();
  RunRecord record = make_record(Algorithm::PmcAdaptCurr, model, observed, config);
  const std::size_t m = model.n_summaries();
  const std::size_t M = ceil_div_alpha(config.N, config.alpha);

  NestedAcceptanceRule rule;
  BudgetLedger ledger{config.budget};
  for (std::size_t t = 1; t <= max_iterations; ++t) {
    if (M > ledger.remaining) {
      record.termination = Termination::BudgetExhausted;
      break;
    }
    const ParticlePopulation* prev = record.iterations.empty() ? nullptr : &record.iterations.back().population;
    const ImportanceDensity q = build_importance_density(prev, false);

    const RngStream stream = iteration_stream(config.seed, t);
    CandidateSource source(model, q, stream, config.workers);
    IterationDraws draws =
        detail::draw_until(source, AcceptanceTest(rule, observed), M, ledger.remaining, config.scale_store_cap, m);
    if (!draws.complete) {
      close_partial(record, draws, source.simulated());
      ledger.used += source.simulated();
      break;
    }

    IterationRecord it;
    it.t = t;
    it.acceptances = draws.accepted.size();
    Adapted cur = adapt_distance(draws.scale_store, config, t, record.notes);
    it.zero_scale_indices = std::move(cur.zero_scales);
    std::vector<Particle> all = to_particles(std::move(draws.accepted));
    assign_distances(all, cur.distance, observed);

    // Random permutation then stable sort: ties in distance break randomly.
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    RngStream selection = stream.fork(kSelectionStream);
    std::shuffle(order.begin(), order.end(), selection.engine());
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *all[a].distance < *all[b].distance; });
    order.resize(config.N);
    std::vector<Particle> kept;
    kept.reserve(config.N);
    for (auto i : order) kept.push_back(std::move(all[i]));
    const double h_t = *kept.back().distance;
    assign_weights(kept, q, model);

    rule.append({cur.distance, h_t});
    it.population.particles = std::move(kept);
    it.weights = cur.distance.weights();
    it.threshold = h_t;
    it.region = rule;
    finish_iteration(record, std::move(it), draws, source, ledger);
  }
  record.total_simulations = ledger.used;
  return record;
}

}  // namespace

RunRecord abc_pmc_adapt_curr(const SimulationModel& model, const Vector& observed, const RunConfig& config) {
  return adapt_curr_impl(model, observed, config, std::numeric_limits<std::size_t>::max());
}

// Same seed and budget as a full pmc-adapt-curr run, stopped after t = 1, so
// the result is that run's first iteration exactly.
InitialTuning first_iteration_tuning(const SimulationModel& model, const Vector& observed, const RunConfig& config) {
  const RunRecord r = adapt_curr_impl(model, observed, config, 1);
  if (r.iterations.empty()) throw Error("first iteration of pmc-adapt-curr did not complete");
  const auto& it = r.iterations.front();
  return {DistanceFunction(it.weights), it.threshold};
}

}  // namespace abcdist
