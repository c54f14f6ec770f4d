#include "abcdist/models/observed.hpp"

namespace abcdist {

ObservedDataset make_observed_dataset(const SimulationModel& model, const std::optional<Vector>& truth,
                                      std::uint64_t seed, std::size_t max_attempts) {
  if (truth) {
    if (static_cast<std::size_t>(truth->size()) != model.n_params()) throw Error("truth has the wrong dimension");
    if (!(model.prior_density(*truth) > 0.0)) throw Error("truth lies outside the prior support");
  }
  const RngStream root(seed);
  for (std::size_t a = 0; a < max_attempts; ++a) {
    RngStream rng = root.fork(a);
    Vector theta = truth ? *truth : model.sample_prior(rng);
    if (auto s = model.simulate(theta, rng)) return {std::move(*s), std::move(theta), seed, a + 1};
  }
  throw Error("could not produce a complete observed dataset");
}

}  // namespace abcdist
