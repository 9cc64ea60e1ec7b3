#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "eegalign/error.hpp"
#include "eegalign/simd.hpp"

using namespace eegalign;
using simd::Isa;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (simd::isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

// Reassociation bound for an n-term sum whose absolute terms add up to `mag`.
double sum_tol(std::size_t n, double mag) { return 4.0 * static_cast<double>(n + 1) * 1.2e-16 * mag + 1e-300; }

}  // namespace

TEST_CASE("scalar table is always available and active() is supported") {
  CHECK(simd::isa_supported(Isa::Scalar));
  CHECK(simd::table(Isa::Scalar).isa == Isa::Scalar);
  CHECK(simd::isa_supported(simd::active().isa));
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (!simd::isa_supported(isa)) CHECK_THROWS_AS(simd::table(isa), ValidationError);
  }
  MESSAGE("active kernels: " << simd::isa_name(simd::active().isa));
}

TEST_CASE("reductions agree with the scalar reference for every length and tail") {
  const auto& ref = simd::scalar_table();
  for (Isa isa : vector_isas()) {
    const auto& k = simd::table(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = random_vec(n, 10 + n, 3.0);
      const auto b = random_vec(n, 1000 + n);
      double mag_a = 0, mag_ab = 0, mag_dev = 0;
      for (std::size_t i = 0; i < n; ++i) {
        mag_a += std::fabs(a[i]);
        mag_ab += std::fabs(a[i] * b[i]);
        mag_dev += (a[i] - 0.25) * (a[i] - 0.25);
      }
      CHECK(std::fabs(k.sum(a.data(), n) - ref.sum(a.data(), n)) <= sum_tol(n, mag_a));
      CHECK(std::fabs(k.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= sum_tol(n, mag_ab));
      CHECK(std::fabs(k.sum_sq_dev(a.data(), 0.25, n) - ref.sum_sq_dev(a.data(), 0.25, n)) <=
            sum_tol(n, mag_dev));
    }
  }
}

TEST_CASE("elementwise kernels agree with the scalar reference") {
  const auto& ref = simd::scalar_table();
  for (Isa isa : vector_isas()) {
    const auto& k = simd::table(isa);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 129u}) {
      const auto x = random_vec(n, 7 * n + 1, 5.0);
      auto y1 = random_vec(n, 7 * n + 2), y2 = y1;
      ref.axpy(-1.75, x.data(), y1.data(), n);
      k.axpy(-1.75, x.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(y1[i] - y2[i]) <= 1e-15 * (std::fabs(y1[i]) + 1.75 * std::fabs(x[i])));

      auto a1 = x, a2 = x;
      ref.affine(a1.data(), 0.5, 1.0 / 3.0, n);
      k.affine(a2.data(), 0.5, 1.0 / 3.0, n);
      CHECK(a1 == a2);  // one subtraction and one product: no reassociation

      auto c1 = x, c2 = x;
      ref.clamp(c1.data(), -2.0, 1.5, n);
      k.clamp(c2.data(), -2.0, 1.5, n);
      CHECK(c1 == c2);
    }
  }
}

TEST_CASE("moment accumulation agrees with the scalar reference") {
  const auto& ref = simd::scalar_table();
  for (Isa isa : vector_isas()) {
    const auto& k = simd::table(isa);
    for (std::size_t n : {1u, 5u, 12u, 33u}) {
      const auto y = random_vec(n, 100 + n), h = random_vec(n, 200 + n);
      const auto my = random_vec(n, 300 + n, 0.1), mh = random_vec(n, 400 + n, 0.1);
      std::vector<double> r[4], v[4];
      for (int j = 0; j < 4; ++j) {
        r[j].assign(n, 1.0);
        v[j].assign(n, 1.0);
      }
      ref.acc_moments(y.data(), h.data(), my.data(), mh.data(),
                      {r[0].data(), r[1].data(), r[2].data(), r[3].data()}, n);
      k.acc_moments(y.data(), h.data(), my.data(), mh.data(),
                    {v[0].data(), v[1].data(), v[2].data(), v[3].data()}, n);
      for (int j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < n; ++i) CHECK(v[j][i] == doctest::Approx(r[j][i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("clamp handles lo == hi and leaves in-range values untouched") {
  std::vector<double> x{-3, -1, 0, 1, 3, 0.5, 0.25, 2, -2};
  auto y = x;
  simd::clamp(y, 0.5, 0.5);
  for (double v : y) CHECK(v == 0.5);
  y = x;
  simd::clamp(y, -10, 10);
  CHECK(y == x);
}
