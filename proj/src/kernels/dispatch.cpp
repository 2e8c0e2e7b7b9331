#include <cstdlib>
#include <string_view>

#include "edgeids/kernels/kernels.hpp"

namespace edgeids::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

const KernelTable& scalar_table() noexcept { return detail::kScalarTable; }

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return &detail::kScalarTable;
    case Isa::Avx2:
#if defined(EDGEIDS_HAVE_AVX2_KERNELS)
      if (__builtin_cpu_supports("avx2")) return &detail::kAvx2Table;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(EDGEIDS_HAVE_NEON_KERNELS)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa detect_isa() noexcept {
  if (const char* forced = std::getenv("EDGEIDS_SIMD")) {
    const std::string_view want(forced);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa)) return table_for(isa) ? isa : Isa::Scalar;
    }
  }
  if (table_for(Isa::Avx2)) return Isa::Avx2;
  if (table_for(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = *table_for(detect_isa());
  return chosen;
}

}  // namespace edgeids::kernels
