#pragma once

// Streaming double-precision kernels with a portable scalar reference and
// AVX2/NEON variants. The variant is picked once at startup from CPUID (or the
// EEGALIGN_SIMD environment variable: scalar, avx2, neon) and every caller goes
// through the dispatch table. Variants agree with the scalar reference up to
// floating-point reassociation.

#include <cstddef>
#include <span>
#include <string_view>

namespace eegalign::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

// Accumulators for centered second moments of (y, yhat) pairs.
struct MomentRefs {
  double* sst;  // += (y - my)^2
  double* ssh;  // += (h - mh)^2
  double* sxy;  // += (y - my)(h - mh)
  double* sse;  // += (y - h)^2
};

struct KernelTable {
  Isa isa;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq_dev)(const double* x, double mean, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*affine)(double* x, double shift, double scale, std::size_t n);  // x = (x - shift) * scale
  void (*clamp)(double* x, double lo, double hi, std::size_t n);
  void (*acc_moments)(const double* y, const double* h, const double* my, const double* mh,
                      MomentRefs acc, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

bool isa_supported(Isa isa);
// Throws ValidationError when the ISA is not available on this CPU/build.
const KernelTable& table(Isa isa);
// The dispatched table (best supported ISA unless overridden by EEGALIGN_SIMD).
const KernelTable& active();

// Convenience wrappers over active().
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum_sq_dev(std::span<const double> x, double mean) {
  return active().sum_sq_dev(x.data(), mean, x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void affine(std::span<double> x, double shift, double scale) {
  active().affine(x.data(), shift, scale, x.size());
}
inline void clamp(std::span<double> x, double lo, double hi) {
  active().clamp(x.data(), lo, hi, x.size());
}

}  // namespace eegalign::simd
