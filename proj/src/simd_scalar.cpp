#include <algorithm>

#include "eegalign/simd.hpp"

namespace eegalign::simd {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_sq_dev_scalar(const double* x, double mean, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void affine_scalar(double* x, double shift, double scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - shift) * scale;
}

void clamp_scalar(double* x, double lo, double hi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::min(std::max(x[i], lo), hi);
}

void acc_moments_scalar(const double* y, const double* h, const double* my, const double* mh,
                        MomentRefs acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
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

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::Scalar,  sum_scalar,   dot_scalar,        sum_sq_dev_scalar,
                             axpy_scalar,  affine_scalar, clamp_scalar,     acc_moments_scalar};
  return t;
}

}  // namespace eegalign::simd
