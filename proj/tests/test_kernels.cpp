#include <doctest.h>

#include <cmath>
#include <vector>

#include "abcdist/algorithms.hpp"
#include "abcdist/distance.hpp"
#include "abcdist/models/normal_toy.hpp"
#include "abcdist/population.hpp"
#include "abcdist/record_io.hpp"
#include "abcdist/simd/kernels.hpp"

using namespace abcdist;
using namespace abcdist::simd;

namespace {

struct IsaGuard {
  Isa saved = active_kernels().isa;
  ~IsaGuard() { set_active_isa(saved); }
};

std::vector<Isa> supported() {
  std::vector<Isa> out;
  for (Isa i : {Isa::Scalar, Isa::Avx2, Isa::Neon})
    if (isa_supported(i)) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("scalar kernel matches the naive weighted sum") {
  RngStream rng(11);
  const std::size_t rows = 7, dims = 3, stride = 9;
  std::vector<double> data(stride * dims), w(dims), ref(dims), out(rows);
  for (auto& x : data) x = rng.normal(0, 10);
  for (auto& x : w) x = rng.uniform();
  for (auto& x : ref) x = rng.normal();
  scalar::sq_distances(data.data(), rows, stride, dims, w.data(), ref.data(), out.data());
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
      const double d = w[i] * data[i * stride + r] - ref[i];
      acc += d * d;
    }
    CHECK(out[r] == acc);
  }
}

TEST_CASE("every supported kernel agrees with scalar bit for bit") {
  CHECK(isa_supported(Isa::Scalar));
  RngStream rng(12);
  for (Isa isa : supported()) {
    const auto& k = kernels_for(isa);
    for (std::size_t rows : {0u, 1u, 3u, 4u, 5u, 8u, 13u, 64u, 101u}) {
      for (std::size_t dims : {1u, 2u, 4u, 7u, 32u}) {
        const std::size_t stride = rows + (rows % 3);
        std::vector<double> data(std::max<std::size_t>(stride * dims, 1)), w(dims), ref(dims);
        for (auto& x : data) x = rng.normal(0, 100) * std::pow(10.0, rng.uniform(-5, 5));
        for (auto& x : w) x = rng.uniform() < 0.2 ? 0.0 : std::exp(rng.normal(0, 3));
        for (auto& x : ref) x = rng.normal(0, 5);
        std::vector<double> a(rows + 1, -1.0), b(rows + 1, -1.0);
        scalar::sq_distances(data.data(), rows, stride, dims, w.data(), ref.data(), a.data());
        k.sq_distances(data.data(), rows, stride, dims, w.data(), ref.data(), b.data());
        CHECK(a == b);  // includes the untouched sentinel past the end
      }
    }
  }
}

TEST_CASE("span front end rejects mismatched sizes") {
  std::vector<double> data(6), w(2), ref(3), out(3);
  CHECK_THROWS(sq_distances(PointBlock{data.data(), 3, 3, 2}, w, ref, out));
  std::vector<double> ref2(2), small(2);
  CHECK_THROWS(sq_distances(PointBlock{data.data(), 3, 3, 2}, w, ref2, small));
  CHECK_NOTHROW(sq_distances(PointBlock{data.data(), 3, 3, 2}, w, ref2, out));
}

TEST_CASE("isa names round trip") {
  CHECK(isa_name(Isa::Scalar) == "scalar");
  CHECK(isa_name(Isa::Avx2) == "avx2");
  CHECK(isa_name(Isa::Neon) == "neon");
}

TEST_CASE("distances and mixture densities are identical under every ISA") {
  IsaGuard guard;
  RngStream rng(13);
  Matrix pts(37, 5);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal(0, 3);
  Vector ref = Vector::Random(5);
  DistanceFunction d({0.5, 2.0, 0.0, 1e-3, 7.0});

  ParticlePopulation pop;
  for (int i = 0; i < 600; ++i) {
    Particle p;
    p.theta = Vector(2);
    p.theta << rng.normal(), rng.normal(1, 2);
    p.summary = p.theta;
    p.weight = rng.uniform() + 0.01;
    pop.particles.push_back(p);
  }
  const auto q = ImportanceDensity::mixture(pop);
  Vector at(2);
  at << 0.3, -0.7;

  set_active_isa(Isa::Scalar);
  const auto base = d.distances(pts, ref);
  const double base_q = q.log_density(at);
  for (Isa isa : supported()) {
    set_active_isa(isa);
    CHECK(d.distances(pts, ref) == base);
    CHECK(q.log_density(at) == base_q);
  }
}

TEST_CASE("a full run is bit-identical under every ISA") {
  IsaGuard guard;
  NormalToyModel model;
  RunConfig cfg;
  cfg.N = 200;
  cfg.budget = 3000;
  cfg.seed = 5;
  set_active_isa(Isa::Scalar);
  RunRecord base = abc_pmc_adapt_curr(model, Vector::Zero(2), cfg);
  for (Isa isa : supported()) {
    set_active_isa(isa);
    RunRecord r = abc_pmc_adapt_curr(model, Vector::Zero(2), cfg);
    r.simd_isa = base.simd_isa;
    CHECK(records_identical(base, r));
  }
}
