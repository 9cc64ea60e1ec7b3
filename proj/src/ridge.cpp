#include "eegalign/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "eegalign/error.hpp"
#include "eegalign/simd.hpp"

namespace eegalign::align {
namespace {

// Fisher-Yates with explicit draws so the permutation does not depend on the
// standard library's distribution implementations.
std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

RowMatrix take_rows(const RowMatrix& M, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = M.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void require_finite(const RowMatrix& M, const char* what) {
  if (!M.allFinite()) throw ValidationError(std::string(what) + " contains non-finite values");
}

bool negligible_variance(double ss, double mean, std::size_t n) {
  const double scale = 1e-12 * std::abs(mean);
  return ss <= static_cast<double>(n) * scale * scale;
}

}  // namespace

Split split_train_test(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("train ratio must lie strictly between 0 and 1");
  }
  if (n < 5) throw ValidationError("need at least 5 items to split, got " + std::to_string(n));
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const auto perm = shuffled(n, seed);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  const auto perm = shuffled(n, seed);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    if (size < 2) {
      std::ostringstream os;
      os << "fold " << f << " would hold " << size << " rows (" << n << " rows, " << folds
         << " folds); each fold needs at least 2";
      throw ValidationError(os.str());
    }
    out[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                  perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(out[f].begin(), out[f].end());
    pos += size;
  }
  return out;
}

RidgeModel ridge_fit(const RowMatrix& X, const RowMatrix& Y, double alpha) {
  if (X.rows() != Y.rows()) throw ValidationError("ridge_fit: X and Y row counts differ");
  if (X.rows() < 2) throw ValidationError("ridge_fit needs at least 2 rows");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("ridge alpha must be positive and finite");
  require_finite(X, "ridge_fit X");
  require_finite(Y, "ridge_fit Y");

  const Eigen::RowVectorXd xm = X.colwise().mean();
  const Eigen::RowVectorXd ym = Y.colwise().mean();
  const RowMatrix Xc = X.rowwise() - xm;
  Eigen::MatrixXd gram = Xc.transpose() * Xc;
  gram.diagonal().array() += alpha;
  // Xc has zero column sums, so Xc'Y equals Xc'Yc.
  const Eigen::MatrixXd rhs = Xc.transpose() * Y;

  RidgeModel m;
  m.alpha = alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    m.W = llt.solve(rhs);
  } else {
    m.W = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
  }
  m.intercept = (ym - xm * m.W).transpose();
  return m;
}

RowMatrix predict(const RidgeModel& m, const RowMatrix& X) {
  if (static_cast<std::size_t>(X.cols()) != m.p()) {
    throw ValidationError("predict: X has " + std::to_string(X.cols()) + " columns, model expects " +
                          std::to_string(m.p()));
  }
  RowMatrix out = X * m.W;
  out.rowwise() += m.intercept.transpose();
  return out;
}

Score score_predictions(const RowMatrix& predicted, const RowMatrix& Y) {
  if (predicted.rows() != Y.rows() || predicted.cols() != Y.cols()) {
    throw ValidationError("score: prediction and target shapes differ");
  }
  if (Y.rows() < 2) throw ValidationError("score needs at least 2 rows");
  const auto n = static_cast<std::size_t>(Y.rows());
  const auto q = static_cast<std::size_t>(Y.cols());
  const auto& k = simd::active();

  std::vector<double> my(q, 0.0), mh(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k.axpy(1.0, Y.row(static_cast<Eigen::Index>(i)).data(), my.data(), q);
    k.axpy(1.0, predicted.row(static_cast<Eigen::Index>(i)).data(), mh.data(), q);
  }
  for (std::size_t j = 0; j < q; ++j) {
    my[j] /= static_cast<double>(n);
    mh[j] /= static_cast<double>(n);
  }
  std::vector<double> sst(q, 0.0), ssh(q, 0.0), sxy(q, 0.0), sse(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k.acc_moments(Y.row(static_cast<Eigen::Index>(i)).data(),
                  predicted.row(static_cast<Eigen::Index>(i)).data(), my.data(), mh.data(),
                  simd::MomentRefs{sst.data(), ssh.data(), sxy.data(), sse.data()}, q);
  }

  Score s;
  double r2_sum = 0.0, corr_sum = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    if (negligible_variance(sst[j], my[j], n)) continue;
    ++s.targets;
    r2_sum += 1.0 - sse[j] / sst[j];
    if (!negligible_variance(ssh[j], mh[j], n)) {
      corr_sum += std::clamp(sxy[j] / std::sqrt(sst[j] * ssh[j]), -1.0, 1.0);
    }
  }
  if (s.targets == 0) throw ValidationError("score: every target has zero variance");
  s.r2 = r2_sum / static_cast<double>(s.targets);
  s.corr = corr_sum / static_cast<double>(s.targets);
  return s;
}

Score score(const RidgeModel& m, const RowMatrix& X, const RowMatrix& Y) {
  return score_predictions(predict(m, X), Y);
}

std::vector<double> default_alphas() {
  std::vector<double> grid(10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = std::pow(10.0, -3.0 + 9.0 * static_cast<double>(i) / 9.0);
  }
  return grid;
}

CvResult ridge_cv(const RowMatrix& X, const RowMatrix& Y, std::span<const double> alphas,
                  std::size_t folds, std::uint64_t seed) {
  if (alphas.empty()) throw ValidationError("ridge_cv needs a non-empty alpha grid");
  if (X.rows() != Y.rows()) throw ValidationError("ridge_cv: X and Y row counts differ");
  std::vector<double> grid(alphas.begin(), alphas.end());
  for (double a : grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("alpha grid values must be positive");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  require_finite(X, "ridge_cv X");
  require_finite(Y, "ridge_cv Y");

  const auto fold_sets = kfold(static_cast<std::size_t>(X.rows()), folds, seed);
  CvResult result;
  std::vector<std::vector<double>> per_alpha(grid.size());

  std::vector<char> in_fold(static_cast<std::size_t>(X.rows()));
  for (std::size_t f = 0; f < fold_sets.size(); ++f) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (std::size_t i : fold_sets[f]) in_fold[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < in_fold.size(); ++i) {
      if (!in_fold[i]) train.push_back(i);
    }
    const RowMatrix Xtr = take_rows(X, train);
    const RowMatrix Ytr = take_rows(Y, train);
    const RowMatrix Xval = take_rows(X, fold_sets[f]);
    const RowMatrix Yval = take_rows(Y, fold_sets[f]);

    const Eigen::RowVectorXd xm = Xtr.colwise().mean();
    const Eigen::RowVectorXd ym = Ytr.colwise().mean();
    const RowMatrix Xc = Xtr.rowwise() - xm;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Xc.transpose() * Xc);
    const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& V = es.eigenvectors();
    const RowMatrix Z = V.transpose() * (Xc.transpose() * Ytr);
    const RowMatrix A = (Xval.rowwise() - xm) * V;

    for (std::size_t a = 0; a < grid.size(); ++a) {
      const Eigen::VectorXd shrink = (lambda.array() + grid[a]).inverse().matrix();
      RowMatrix pred = (A * shrink.asDiagonal()) * Z;
      pred.rowwise() += ym;
      const double r2 = score_predictions(pred, Yval).r2;
      per_alpha[a].push_back(r2);
      result.table.rows.push_back({f, grid[a], r2});
    }
  }

  std::size_t best = 0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const auto& v = per_alpha[a];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double r : v) ss += (r - mean) * (r - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    result.table.summary.push_back({grid[a], mean, sd});
    if (mean > result.table.summary[best].mean_r2) best = a;
  }
  result.alpha = grid[best];
  result.model = ridge_fit(X, Y, result.alpha);
  return result;
}

}  // namespace eegalign::align
