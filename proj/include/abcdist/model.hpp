#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abcdist/rng.hpp"
#include "abcdist/types.hpp"

namespace abcdist {

// Generative model contract used by every inference algorithm.
//
// prior_density must be strictly positive on anything sample_prior can
// return. simulate returns a summary vector of length n_summaries(), or
// nullopt when the simulation was abandoned (the Incomplete marker).
// Implementations must be immutable so one model can serve many workers.
class SimulationModel {
 public:
  virtual ~SimulationModel() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t n_params() const = 0;
  virtual std::size_t n_summaries() const = 0;

  virtual Vector sample_prior(RngStream& rng) const = 0;
  virtual double prior_density(const Vector& theta) const = 0;
  virtual std::optional<Vector> simulate(const Vector& theta, RngStream& rng) const = 0;

  virtual std::vector<std::string> param_names() const;
};

}  // namespace abcdist
