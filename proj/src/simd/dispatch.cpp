#include <cstdlib>
#include <string>

#include "abcdist/simd/kernels.hpp"
#include "abcdist/types.hpp"

namespace abcdist::simd {

namespace {

constexpr KernelTable kScalarTable{Isa::Scalar, &scalar::sq_distances};
#if defined(ABCDIST_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::Avx2, &avx2::sq_distances};
#endif
#if defined(ABCDIST_HAVE_NEON)
constexpr KernelTable kNeonTable{Isa::Neon, &neon::sq_distances};
#endif

Isa best_isa() {
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("ABCDIST_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::Scalar;
    if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (v == "neon" && isa_supported(Isa::Neon)) return Isa::Neon;
  }
  return best_isa();
}

const KernelTable*& active_slot() {
  static const KernelTable* slot = &kernels_for(initial_isa());
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(ABCDIST_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(ABCDIST_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw Error("instruction set not supported: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(ABCDIST_HAVE_AVX2)
    case Isa::Avx2: return kAvx2Table;
#endif
#if defined(ABCDIST_HAVE_NEON)
    case Isa::Neon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

const KernelTable& active_kernels() { return *active_slot(); }

void set_active_isa(Isa isa) { active_slot() = &kernels_for(isa); }

void sq_distances(const PointBlock& block, std::span<const double> weights,
                  std::span<const double> scaled_ref, std::span<double> out) {
  if (weights.size() != block.dims || scaled_ref.size() != block.dims)
    throw Error("sq_distances: weight/reference dimension mismatch");
  if (out.size() < block.rows) throw Error("sq_distances: output too short");
  if (block.rows > 0 && block.stride < block.rows) throw Error("sq_distances: stride shorter than rows");
  active_kernels().sq_distances(block.data, block.rows, block.stride, block.dims, weights.data(),
                                scaled_ref.data(), out.data());
}

}  // namespace abcdist::simd
