#include <cstdlib>
#include <string>

#include "eegalign/error.hpp"
#include "eegalign/simd.hpp"

namespace eegalign::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw ValidationError("SIMD variant '" + std::string(isa_name(isa)) +
                          "' is not available on this machine");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
      return avx2_table();
#endif
#if defined(__aarch64__)
    case Isa::Neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

namespace {

const KernelTable& select() {
  if (const char* env = std::getenv("EEGALIGN_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_supported(isa)) return table(isa);
    }
  }
  if (isa_supported(Isa::Avx2)) return table(Isa::Avx2);
  if (isa_supported(Isa::Neon)) return table(Isa::Neon);
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace eegalign::simd
