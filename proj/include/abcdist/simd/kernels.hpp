#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace abcdist::simd {

// A block of `rows` points of dimension `dims`, stored dimension-major:
// coordinate i of point r lives at data[i * stride + r]. This is the layout
// of a column-major Eigen matrix with one point per row.
struct PointBlock {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t stride = 0;
  std::size_t dims = 0;
};

// out[r] = sum_i (weights[i] * x[r][i] - scaled_ref[i])^2, accumulated in
// increasing i. Every variant uses the same operation order (no FMA), so
// results agree bit for bit across instruction sets.
using SqDistanceFn = void (*)(const double* data, std::size_t rows, std::size_t stride,
                              std::size_t dims, const double* weights, const double* scaled_ref,
                              double* out);

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

struct KernelTable {
  Isa isa;
  SqDistanceFn sq_distances;
};

// Best supported table, chosen once at first use. ABCDIST_SIMD=scalar|avx2|neon
// in the environment overrides the choice when the override is supported.
const KernelTable& active_kernels();
const KernelTable& kernels_for(Isa isa);  // throws if unsupported

// Replace the active table (tests and benchmarking); not thread-safe.
void set_active_isa(Isa isa);

namespace scalar {
void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out);
}
namespace avx2 {
void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out);
}
namespace neon {
void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out);
}

// Span-checked front end over the active table.
void sq_distances(const PointBlock& block, std::span<const double> weights,
                  std::span<const double> scaled_ref, std::span<double> out);

}  // namespace abcdist::simd
