#pragma once

#include <cstdint>
#include <random>

namespace abcdist {

// Seedable random stream. Two streams built from the same seed produce
// identical draws; fork(i) derives an independent child stream from
// (seed, i) alone, regardless of how many draws the parent has made.
// A stream is single-owner: hand each worker its own fork.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  RngStream fork(std::uint64_t index) const;

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1)
  double normal(double mean, double sd);
  double exponential(double rate);
  double gamma(double shape);  // unit scale
  double beta(double a, double b);
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace abcdist
