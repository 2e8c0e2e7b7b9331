// Compiled with -mavx2 (no FMA) and only reached after a CPUID check.
#include <immintrin.h>

#include "edgeids/kernels/kernels.hpp"

namespace edgeids::kernels {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(pair, pair);
  return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

// One lane per exemplar; each lane accumulates dimensions in the same order as
// the scalar loop, so results match it bit for bit.
void squared_distances_avx2(const double* columns, std::size_t stride, std::size_t count,
                            std::size_t dim, const double* query, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d col = _mm256_loadu_pd(columns + d * stride + i);
      const __m256d diff = _mm256_sub_pd(col, _mm256_set1_pd(query[d]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = columns[d * stride + i] - query[d];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

void standardize_avx2(const double* x, const double* mean, const double* stddev, double* out,
                      std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d centered = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(mean + i));
    _mm256_storeu_pd(out + i, _mm256_div_pd(centered, _mm256_loadu_pd(stddev + i)));
  }
  for (; i < n; ++i) out[i] = (x[i] - mean[i]) / stddev[i];
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double ssd_avx2(const double* x, std::size_t n, double center) {
  const __m256d c = _mm256_set1_pd(center);
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), c);
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), c);
    a0 = _mm256_add_pd(a0, _mm256_mul_pd(d0, d0));
    a1 = _mm256_add_pd(a1, _mm256_mul_pd(d1, d1));
  }
  double acc = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) {
    const double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table = {Isa::Avx2,       squared_distances_avx2, standardize_avx2,
                                sum_avx2,        ssd_avx2,               dot_avx2};
}  // namespace detail

}  // namespace edgeids::kernels
