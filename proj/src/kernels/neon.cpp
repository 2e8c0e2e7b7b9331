#include <arm_neon.h>

#include "edgeids/kernels/kernels.hpp"

namespace edgeids::kernels {
namespace {

void squared_distances_neon(const double* columns, std::size_t stride, std::size_t count,
                            std::size_t dim, const double* query, double* out) {
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      const float64x2_t diff = vsubq_f64(vld1q_f64(columns + d * stride + i), vdupq_n_f64(query[d]));
      acc = vaddq_f64(acc, vmulq_f64(diff, diff));
    }
    vst1q_f64(out + i, acc);
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

void standardize_neon(const double* x, const double* mean, const double* stddev, double* out,
                      std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t centered = vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i));
    vst1q_f64(out + i, vdivq_f64(centered, vld1q_f64(stddev + i)));
  }
  for (; i < n; ++i) out[i] = (x[i] - mean[i]) / stddev[i];
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

double ssd_neon(const double* x, std::size_t n, double center) {
  const float64x2_t c = vdupq_n_f64(center);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), c);
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - center;
    total += d * d;
  }
  return total;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

namespace detail {
const KernelTable kNeonTable = {Isa::Neon, squared_distances_neon, standardize_neon,
                                sum_neon,  ssd_neon,               dot_neon};
}  // namespace detail

}  // namespace edgeids::kernels
