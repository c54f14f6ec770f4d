#include <immintrin.h>

#include "abcdist/simd/kernels.hpp"

namespace abcdist::simd::avx2 {

// Lanes run over points, not coordinates, so each lane accumulates its own
// point in the same order as the scalar loop.
void sq_distances(const double* data, std::size_t rows, std::size_t stride, std::size_t dims,
                  const double* weights, const double* scaled_ref, double* out) {
  std::size_t r = 0;
  for (; r + 8 <= rows; r += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < dims; ++i) {
      const __m256d w = _mm256_broadcast_sd(weights + i);
      const __m256d o = _mm256_broadcast_sd(scaled_ref + i);
      const double* col = data + i * stride + r;
      const __m256d t0 = _mm256_sub_pd(_mm256_mul_pd(w, _mm256_loadu_pd(col)), o);
      const __m256d t1 = _mm256_sub_pd(_mm256_mul_pd(w, _mm256_loadu_pd(col + 4)), o);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(t0, t0));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(t1, t1));
    }
    _mm256_storeu_pd(out + r, acc0);
    _mm256_storeu_pd(out + r + 4, acc1);
  }
  for (; r + 4 <= rows; r += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < dims; ++i) {
      const __m256d w = _mm256_broadcast_sd(weights + i);
      const __m256d o = _mm256_broadcast_sd(scaled_ref + i);
      const __m256d t = _mm256_sub_pd(_mm256_mul_pd(w, _mm256_loadu_pd(data + i * stride + r)), o);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(t, t));
    }
    _mm256_storeu_pd(out + r, acc);
  }
  if (r < rows) scalar::sq_distances(data + r, rows - r, stride, dims, weights, scaled_ref, out + r);
}

}  // namespace abcdist::simd::avx2
