#include <doctest.h>

#include <cmath>
#include <random>

#include "eegalign/dimred.hpp"
#include "eegalign/error.hpp"
#include "oracles.hpp"

using namespace eegalign;
using namespace eegalign::dimred;

namespace {

// Correlated data: independent normals with decaying scales, then a fixed mix.
RowMatrix correlated(std::size_t n, std::size_t d, std::uint64_t seed) {
  RowMatrix Z = oracle::random_matrix(n, d, seed);
  for (std::size_t j = 0; j < d; ++j) Z.col(static_cast<Eigen::Index>(j)) *= 1.0 + 2.0 * static_cast<double>(d - j);
  const RowMatrix M = oracle::random_matrix(d, d, seed + 99);
  return Z * M;
}

// max over components of min(|a - b|, |a + b|) entrywise distance
double max_sign_free_distance(const RowMatrix& comps, const oracle::EigenPairs& eig, std::size_t k) {
  double worst = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double plus = 0, minus = 0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(comps.cols()); ++j) {
      const double e = static_cast<double>(eig.vectors[i][j]);
      plus = std::max(plus, std::fabs(comps(i, j) - e));
      minus = std::max(minus, std::fabs(comps(i, j) + e));
    }
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

double abs_corr(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  std::vector<double> x(a.rows()), y(b.rows());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    x[r] = a(r, i);
    y[r] = b(r, j);
  }
  return std::fabs(oracle::pearson(x, y));
}

struct Mixed {
  RowMatrix S, X;
};

Mixed uniform_mixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mixed m;
  m.S.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < m.S.size(); ++i) m.S.data()[i] = u(rng);
  RowMatrix A(2, 2);
  A << 1.0, 0.6, 0.4, 1.0;
  m.X = m.S * A.transpose();
  m.X.col(0).array() += 3.0;
  return m;
}

}  // namespace

TEST_CASE("PCA components match the covariance eigendecomposition") {
  const RowMatrix X = correlated(50, 8, 1);
  const auto eig = oracle::jacobi_eigen(oracle::covariance(X));
  const auto m = pca_fit(X, 8);
  CHECK(max_sign_free_distance(m.components, eig, 8) < 1e-6);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(m.explained_variance[i] == doctest::Approx(static_cast<double>(eig.values[i])).epsilon(1e-9));
  }
  const auto m3 = pca_fit(X, 3);
  CHECK(max_sign_free_distance(m3.components, eig, 3) < 1e-6);
}

TEST_CASE("wide data takes the Gram route and still matches the oracle") {
  const RowMatrix X = correlated(15, 40, 2);
  const auto eig = oracle::jacobi_eigen(oracle::covariance(X));
  const auto m = pca_fit(X, 6);
  CHECK(!m.degenerate);
  CHECK(max_sign_free_distance(m.components, eig, 6) < 1e-6);
  const RowMatrix G = m.components * m.components.transpose();
  CHECK((G - RowMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("PCA rows are orthonormal, ratios are ordered and bounded, signs follow the rule") {
  const RowMatrix X = correlated(60, 12, 3);
  const auto m = pca_fit(X, 10);
  const RowMatrix G = m.components * m.components.transpose();
  CHECK((G - RowMatrix::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-8);
  double total = 0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    CHECK(m.explained_variance_ratio[i] >= 0.0);
    CHECK(m.explained_variance_ratio[i] <= 1.0);
    if (i > 0) CHECK(m.explained_variance_ratio[i] <= m.explained_variance_ratio[i - 1]);
    total += m.explained_variance_ratio[i];
    Eigen::Index arg;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(m.components(i, arg) > 0.0);
  }
  CHECK(total <= 1.0 + 1e-9);
}

TEST_CASE("points on a line need one component") {
  const auto noise = oracle::random_matrix(40, 3, 4);
  RowMatrix X(40, 3);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const double t = static_cast<double>(i) - 20.0;
    X.row(i) << 1.0 + 2.0 * t, -3.0 + 0.5 * t, 1.5 * t;
  }
  X += 1e-6 * noise;
  const auto m = pca_fit(X, 1);
  CHECK(m.explained_variance_ratio[0] >= 0.999);
}

TEST_CASE("identical rows give flagged zero components") {
  RowMatrix X(10, 4);
  X.rowwise() = Eigen::RowVector4d(1, 2, 3, 4);
  const auto m = pca_fit(X, 2);
  CHECK(m.degenerate);
  CHECK(m.components.isZero());
  CHECK(m.explained_variance_ratio.isZero());
  CHECK(pca_transform(m, X).isZero());
}

TEST_CASE("rank-deficient data flags only the missing directions") {
  RowMatrix X = oracle::random_matrix(30, 2, 5) * oracle::random_matrix(2, 6, 6);
  const auto m = pca_fit(X, 4);
  CHECK(m.degenerate);
  CHECK(!m.components.row(0).isZero());
  CHECK(!m.components.row(1).isZero());
  CHECK(m.components.row(2).isZero());
  CHECK(m.components.row(3).isZero());
}

TEST_CASE("PCA argument checks") {
  const auto X = oracle::random_matrix(5, 3, 7);
  CHECK_THROWS_AS(pca_fit(X, 4), ValidationError);
  CHECK_THROWS_AS(pca_fit(X, 0), ValidationError);
  const auto m = pca_fit(X, 2);
  CHECK_THROWS_AS(pca_transform(m, oracle::random_matrix(2, 4, 8)), ValidationError);
  CHECK_THROWS_AS(pca_reconstruct(m, oracle::random_matrix(2, 3, 8)), ValidationError);
}

TEST_CASE("transform and reconstruct") {
  const RowMatrix X = correlated(50, 8, 9);
  const auto m = pca_fit(X, 3);
  const RowMatrix mean_row = m.mean.transpose();
  CHECK(pca_transform(m, mean_row).cwiseAbs().maxCoeff() < 1e-9);

  // The residual sum of squares is exactly the variance left in the dropped directions.
  const auto eig = oracle::jacobi_eigen(oracle::covariance(X));
  long double dropped = 0;
  for (std::size_t j = 3; j < 8; ++j) dropped += eig.values[j];
  const double residual = (X - pca_reconstruct(m, pca_transform(m, X))).squaredNorm();
  CHECK(residual == doctest::Approx(static_cast<double>(dropped * 49)).epsilon(1e-8));

  const RowMatrix S = pca_transform(m, X);
  const auto C = oracle::covariance(S);
  long double trace = 0;
  for (std::size_t i = 0; i < 3; ++i) trace += C[i][i];
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(std::fabs(static_cast<double>(C[i][j])) < 1e-8 * static_cast<double>(trace));
}

TEST_CASE("FastICA recovers two mixed uniform sources") {
  const auto mix = uniform_mixture(2000, 10);
  const auto m = ica_fit(mix.X, 2, 42);
  const RowMatrix S = ica_transform(m, mix.X);
  const double direct = std::min(abs_corr(S, 0, mix.S, 0), abs_corr(S, 1, mix.S, 1));
  const double swapped = std::min(abs_corr(S, 0, mix.S, 1), abs_corr(S, 1, mix.S, 0));
  CHECK(std::max(direct, swapped) >= 0.95);
  CHECK(m.iterations >= 1);
}

TEST_CASE("FastICA is bit-identical for a fixed seed") {
  const auto mix = uniform_mixture(500, 11);
  const auto a = ica_fit(mix.X, 2, 7);
  const auto b = ica_fit(mix.X, 2, 7);
  CHECK(a.unmixing == b.unmixing);
  CHECK(a.whitening == b.whitening);
  CHECK(a.mean == b.mean);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("FastICA training output is white and the transform is affine") {
  const auto mix = uniform_mixture(1500, 12);
  const auto m = ica_fit(mix.X, 2, 3);
  const RowMatrix S = ica_transform(m, mix.X);
  const auto C = oracle::covariance(S);
  CHECK(std::fabs(static_cast<double>(C[0][0]) - 1.0) < 0.05);
  CHECK(std::fabs(static_cast<double>(C[1][1]) - 1.0) < 0.05);

  const RowMatrix Z = (mix.X.rowwise() - m.mean.transpose()) * m.whitening.transpose();
  const auto Cz = oracle::covariance(Z);
  RowMatrix Czm(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) Czm(i, j) = static_cast<double>(Cz[i][j]);
  CHECK((m.unmixing * Czm * m.unmixing.transpose() - RowMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-4);

  const RowMatrix mean_row = m.mean.transpose();
  CHECK(ica_transform(m, mean_row).cwiseAbs().maxCoeff() < 1e-12);
  const RowMatrix x = mix.X.row(3), y = mix.X.row(8);
  const double a = 0.3;
  const RowMatrix lhs = ica_transform(m, a * x + (1 - a) * y);
  const RowMatrix rhs = a * ica_transform(m, x) + (1 - a) * ica_transform(m, y);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(ica_transform(m, oracle::random_matrix(1, 3, 1)), ValidationError);
}

TEST_CASE("FastICA sources do not depend on positive column scaling") {
  const auto mix = uniform_mixture(1500, 13);
  RowMatrix scaled = mix.X;
  scaled.col(0) *= 7.5;
  const RowMatrix a = ica_transform(ica_fit(mix.X, 2, 5), mix.X);
  const RowMatrix b = ica_transform(ica_fit(scaled, 2, 5), scaled);
  const double direct = std::min(abs_corr(a, 0, b, 0), abs_corr(a, 1, b, 1));
  const double swapped = std::min(abs_corr(a, 0, b, 1), abs_corr(a, 1, b, 0));
  CHECK(std::max(direct, swapped) > 0.999);
}

TEST_CASE("FastICA reports the iteration count when it gives up") {
  const auto X = oracle::random_matrix(400, 3, 14);  // Gaussian: not identifiable
  IcaOptions opts;
  opts.max_iter = 3;
  opts.tol = 1e-14;
  try {
    ica_fit(X, 3, 1, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 3);
  }
  CHECK_THROWS_AS(ica_fit(X, 400, 1), ValidationError);
}

TEST_CASE("method names") {
  CHECK(parse_method("pca") == Method::Pca);
  CHECK(parse_method("ica") == Method::Ica);
  CHECK(method_name(Method::Ica) == "ica");
  CHECK_THROWS_AS(parse_method("svd"), ValidationError);
}
