#include "abcdist/rng.hpp"

namespace abcdist {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  auto seq = make_seed_seq(seed);
  engine_.seed(seq);
}

RngStream RngStream::fork(std::uint64_t index) const {
  // Tag 0x5eed distinguishes child derivation from plain seeding.
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return RngStream((static_cast<std::uint64_t>(out[1]) << 32) | out[0]);
}

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::normal(double mean, double sd) { return mean + sd * normal_(engine_); }

double RngStream::exponential(double rate) {
  return std::exponential_distribution<double>(rate)(engine_);
}

double RngStream::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

}  // namespace abcdist
