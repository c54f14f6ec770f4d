#include "abcdist/simd/kernels.hpp"

namespace abcdist::simd::scalar {

void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
      const double t = weights[i] * data[i * stride + r] - scaled_ref[i];
      acc += t * t;
    }
    out[r] = acc;
  }
}

}  // namespace abcdist::simd::scalar
