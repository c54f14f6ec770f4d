#include <arm_neon.h>

#include "abcdist/simd/kernels.hpp"

namespace abcdist::simd::neon {

void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out) {
  std::size_t r = 0;
  for (; r + 2 <= rows; r += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < dims; ++i) {
      const float64x2_t w = vdupq_n_f64(weights[i]);
      const float64x2_t o = vdupq_n_f64(scaled_ref[i]);
      const float64x2_t t = vsubq_f64(vmulq_f64(w, vld1q_f64(data + i * stride + r)), o);
      acc = vaddq_f64(acc, vmulq_f64(t, t));
    }
    vst1q_f64(out + r, acc);
  }
  if (r < rows) scalar::sq_distances(data + r, rows - r, stride, dims, weights, scaled_ref, out + r);
}

}  // namespace abcdist::simd::neon
