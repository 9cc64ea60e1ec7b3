#if defined(__aarch64__)

#include <arm_neon.h>

#include "eegalign/simd.hpp"

namespace eegalign::simd {
namespace {

double sum_neon(const double* x, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vaddq_f64(a0, vld1q_f64(x + i));
    a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(a + i), vld1q_f64(b + i));
    a1 = vfmaq_f64(a1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(a0, a1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_dev_neon(const double* x, double mean, std::size_t n) {
  const float64x2_t m = vdupq_n_f64(mean);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), m);
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void affine_neon(double* x, double shift, double scale, std::size_t n) {
  const float64x2_t sh = vdupq_n_f64(shift);
  const float64x2_t sc = vdupq_n_f64(scale);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vsubq_f64(vld1q_f64(x + i), sh), sc));
  for (; i < n; ++i) x[i] = (x[i] - shift) * scale;
}

void clamp_neon(double* x, double lo, double hi, std::size_t n) {
  const float64x2_t l = vdupq_n_f64(lo);
  const float64x2_t h = vdupq_n_f64(hi);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vminq_f64(vmaxq_f64(vld1q_f64(x + i), l), h));
  for (; i < n; ++i) x[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
}

void acc_moments_neon(const double* y, const double* h, const double* my, const double* mh,
                      MomentRefs acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t yv = vld1q_f64(y + i);
    const float64x2_t hv = vld1q_f64(h + i);
    const float64x2_t dy = vsubq_f64(yv, vld1q_f64(my + i));
    const float64x2_t dh = vsubq_f64(hv, vld1q_f64(mh + i));
    const float64x2_t e = vsubq_f64(yv, hv);
    vst1q_f64(acc.sst + i, vfmaq_f64(vld1q_f64(acc.sst + i), dy, dy));
    vst1q_f64(acc.ssh + i, vfmaq_f64(vld1q_f64(acc.ssh + i), dh, dh));
    vst1q_f64(acc.sxy + i, vfmaq_f64(vld1q_f64(acc.sxy + i), dy, dh));
    vst1q_f64(acc.sse + i, vfmaq_f64(vld1q_f64(acc.sse + i), e, e));
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

const KernelTable& neon_table() {
  static const KernelTable t{Isa::Neon,  sum_neon,    dot_neon,   sum_sq_dev_neon,
                             axpy_neon,  affine_neon, clamp_neon, acc_moments_neon};
  return t;
}

}  // namespace eegalign::simd

#endif
