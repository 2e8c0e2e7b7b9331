#pragma once
// Data-parallel inner loops used by the detection, normalization, energy and
// statistics code. Each kernel has a scalar reference implementation and
// vector variants (AVX2 on x86-64, NEON on AArch64) selected once at runtime.
//
// Exactness contract (checked by the equivalence tests):
//   squared_distances, standardize  -> bit-identical to the scalar path
//   sum, sum_squared_deviations, dot -> equal up to reassociation rounding

#include <cstddef>
#include <span>
#include <string_view>

namespace edgeids::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // Column-major exemplar block: value of dimension d for exemplar i lives at
  // columns[d * stride + i]. Writes count squared Euclidean distances to out.
  void (*squared_distances)(const double* columns, std::size_t stride, std::size_t count,
                            std::size_t dim, const double* query, double* out);
  // out[i] = (x[i] - mean[i]) / stddev[i]
  void (*standardize)(const double* x, const double* mean, const double* stddev, double* out,
                      std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // sum of (x[i] - center)^2
  double (*sum_squared_deviations)(const double* x, std::size_t n, double center);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// Table for the given ISA, or nullptr when this build or this CPU lacks it.
const KernelTable* table_for(Isa isa) noexcept;

// Best ISA the host supports. EDGEIDS_SIMD=scalar|avx2|neon overrides the
// choice (an unsupported request falls back to scalar).
Isa detect_isa() noexcept;

// The table chosen by detect_isa(), resolved on first use.
const KernelTable& active() noexcept;

inline void squared_distances(std::span<const double> columns, std::size_t stride,
                              std::size_t count, std::span<const double> query,
                              std::span<double> out) {
  active().squared_distances(columns.data(), stride, count, query.size(), query.data(),
                             out.data());
}

inline void standardize(std::span<const double> x, std::span<const double> mean,
                        std::span<const double> stddev, std::span<double> out) {
  active().standardize(x.data(), mean.data(), stddev.data(), out.data(), x.size());
}

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double sum_squared_deviations(std::span<const double> x, double center) {
  return active().sum_squared_deviations(x.data(), x.size(), center);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

namespace detail {
// Individual implementations, exposed for the dispatch table and tests.
extern const KernelTable kScalarTable;
#if defined(EDGEIDS_HAVE_AVX2_KERNELS)
extern const KernelTable kAvx2Table;
#endif
#if defined(EDGEIDS_HAVE_NEON_KERNELS)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace edgeids::kernels
