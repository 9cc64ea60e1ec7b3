// AVX2/FMA variants. Functions carry a target attribute so this file builds
// without global -mavx2 and is only reached after a CPUID check.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "eegalign/simd.hpp"

#define EEGALIGN_AVX2 __attribute__((target("avx2,fma")))

namespace eegalign::simd {
namespace {

EEGALIGN_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

EEGALIGN_AVX2 double sum_avx2(const double* x, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

EEGALIGN_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

EEGALIGN_AVX2 double sum_sq_dev_avx2(const double* x, double mean, std::size_t n) {
  const __m256d m = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), m);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

EEGALIGN_AVX2 void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

EEGALIGN_AVX2 void affine_avx2(double* x, double shift, double scale, std::size_t n) {
  const __m256d sh = _mm256_set1_pd(shift);
  const __m256d sc = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), sh), sc));
  }
  for (; i < n; ++i) x[i] = (x[i] - shift) * scale;
}

EEGALIGN_AVX2 void clamp_avx2(double* x, double lo, double hi, std::size_t n) {
  const __m256d l = _mm256_set1_pd(lo);
  const __m256d h = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // max(x, lo) then min(., hi) matches std::min(std::max(x, lo), hi) for finite input.
    _mm256_storeu_pd(x + i, _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(x + i), l), h));
  }
  for (; i < n; ++i) x[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
}

EEGALIGN_AVX2 void acc_moments_avx2(const double* y, const double* h, const double* my,
                                    const double* mh, MomentRefs acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    const __m256d hv = _mm256_loadu_pd(h + i);
    const __m256d dy = _mm256_sub_pd(yv, _mm256_loadu_pd(my + i));
    const __m256d dh = _mm256_sub_pd(hv, _mm256_loadu_pd(mh + i));
    const __m256d e = _mm256_sub_pd(yv, hv);
    _mm256_storeu_pd(acc.sst + i, _mm256_fmadd_pd(dy, dy, _mm256_loadu_pd(acc.sst + i)));
    _mm256_storeu_pd(acc.ssh + i, _mm256_fmadd_pd(dh, dh, _mm256_loadu_pd(acc.ssh + i)));
    _mm256_storeu_pd(acc.sxy + i, _mm256_fmadd_pd(dy, dh, _mm256_loadu_pd(acc.sxy + i)));
    _mm256_storeu_pd(acc.sse + i, _mm256_fmadd_pd(e, e, _mm256_loadu_pd(acc.sse + i)));
  }
  for (; i < n; ++i) {
    const double dy = y[i] - my[i];
    const double dh = h[i] - mh[i];
    const double e = y[i] - h[i];
    acc.sst[i] += dy * dy;
    acc.ssh[i] += dh * dh;
    acc.sxy[i] += dy * dh;
    acc.sse[i] += e * e;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::Avx2,  sum_avx2,    dot_avx2,   sum_sq_dev_avx2,
                             axpy_avx2,  affine_avx2, clamp_avx2, acc_moments_avx2};
  return t;
}

}  // namespace eegalign::simd

#endif
