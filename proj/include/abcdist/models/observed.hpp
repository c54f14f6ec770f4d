#pragma once

#include <cstdint>
#include <optional>

#include "abcdist/model.hpp"

namespace abcdist {

struct ObservedDataset {
  Vector values;
  std::optional<Vector> truth;
  std::uint64_t seed = 0;
  std::size_t attempts = 1;  // simulations needed (incomplete ones are retried)
};

// One simulation at `truth` (or at a prior draw when truth is empty) becomes
// the observation. Attempt a uses substream a of the seed; incomplete
// simulations move on to the next substream.
ObservedDataset make_observed_dataset(const SimulationModel& model, const std::optional<Vector>& truth,
                                      std::uint64_t seed, std::size_t max_attempts = 1000);

}  // namespace abcdist
