#include "edgeids/kernels/kernels.hpp"

namespace edgeids::kernels {
namespace {

void squared_distances_scalar(const double* columns, std::size_t stride, std::size_t count,
                              std::size_t dim, const double* query, double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = columns[d * stride + i] - query[d];
      acc = acc + diff * diff;
    }
    out[i] = acc;
  }
}

void standardize_scalar(const double* x, const double* mean, const double* stddev, double* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean[i]) / stddev[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double ssd_scalar(const double* x, std::size_t n, double center) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - center;
    acc += d * d;
  }
  return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

namespace detail {
const KernelTable kScalarTable = {Isa::Scalar,        squared_distances_scalar,
                                  standardize_scalar, sum_scalar,
                                  ssd_scalar,         dot_scalar};
}  // namespace detail

}  // namespace edgeids::kernels
