#include "eegalign/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "eegalign/error.hpp"

namespace eegalign::dimred {
namespace {

// Eigenvalues below this fraction of the largest are treated as zero variance.
constexpr double kRelativeRankTol = 1e-12;

void flip_to_largest_positive(RowMatrix& comps) {
  for (Eigen::Index r = 0; r < comps.rows(); ++r) {
    Eigen::Index arg = 0;
    comps.row(r).cwiseAbs().maxCoeff(&arg);
    if (comps(r, arg) < 0.0) comps.row(r) *= -1.0;
  }
}

// Modified Gram-Schmidt over the non-zero rows, in order.
void reorthonormalize(RowMatrix& comps) {
  for (Eigen::Index r = 0; r < comps.rows(); ++r) {
    if (comps.row(r).squaredNorm() == 0.0) continue;
    for (Eigen::Index s = 0; s < r; ++s) {
      if (comps.row(s).squaredNorm() == 0.0) continue;
      comps.row(r) -= comps.row(r).dot(comps.row(s)) * comps.row(s);
    }
    comps.row(r).normalize();
  }
}

void check_width(const RowMatrix& X, std::size_t dims, const char* what) {
  if (static_cast<std::size_t>(X.cols()) != dims) {
    std::ostringstream os;
    os << what << ": input has " << X.cols() << " columns, model expects " << dims;
    throw ValidationError(os.str());
  }
}

RowMatrix symmetric_decorrelation(const RowMatrix& W) {
  const Eigen::MatrixXd wwt = W * W.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wwt);
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd root = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
  return root * W;
}

}  // namespace

std::string_view method_name(Method m) { return m == Method::Pca ? "pca" : "ica"; }

Method parse_method(std::string_view name) {
  if (name == "pca") return Method::Pca;
  if (name == "ica") return Method::Ica;
  throw ValidationError("unknown reduction method '" + std::string(name) + "' (expected pca or ica)");
}

PcaModel pca_fit(const RowMatrix& X, std::size_t k) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  if (k < 1) throw ValidationError("PCA needs at least one component");
  if (k > std::min(n, d)) {
    std::ostringstream os;
    os << "cannot extract " << k << " components from " << n << " x " << d << " data";
    throw ValidationError(os.str());
  }
  if (!X.allFinite()) throw ValidationError("PCA input contains non-finite values");

  PcaModel m;
  m.mean = X.colwise().mean().transpose();
  const RowMatrix Xc = X.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(std::max<std::size_t>(n, 2) - 1);
  const double total_ss = Xc.squaredNorm();

  m.components = RowMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  m.explained_variance = Vector::Zero(static_cast<Eigen::Index>(k));
  m.explained_variance_ratio = Vector::Zero(static_cast<Eigen::Index>(k));

  Eigen::VectorXd evals;  // sums of squares along each direction, descending
  if (d <= n) {
    Eigen::MatrixXd scatter = Xc.transpose() * Xc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
    evals = es.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    for (std::size_t i = 0; i < k; ++i) {
      m.components.row(static_cast<Eigen::Index>(i)) = vecs.col(static_cast<Eigen::Index>(i)).transpose();
    }
  } else {
    // Gram route for wide data: right singular vectors from the n x n Gram matrix.
    Eigen::MatrixXd gram = Xc * Xc.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    evals = es.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    for (std::size_t i = 0; i < k; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (evals(ii) <= 0.0) continue;
      m.components.row(ii) = (Xc.transpose() * vecs.col(ii)).transpose() / std::sqrt(evals(ii));
    }
  }

  const double top = evals.size() > 0 ? std::max(evals(0), 0.0) : 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (top == 0.0 || total_ss == 0.0 || evals(ii) <= kRelativeRankTol * top) {
      m.components.row(ii).setZero();
      m.degenerate = true;
      continue;
    }
    m.explained_variance(ii) = evals(ii) / denom;
    m.explained_variance_ratio(ii) = evals(ii) / total_ss;
  }
  if (d > n) reorthonormalize(m.components);
  flip_to_largest_positive(m.components);
  return m;
}

RowMatrix pca_transform(const PcaModel& m, const RowMatrix& X) {
  check_width(X, m.dims(), "pca_transform");
  return (X.rowwise() - m.mean.transpose()) * m.components.transpose();
}

RowMatrix pca_reconstruct(const PcaModel& m, const RowMatrix& scores) {
  if (static_cast<std::size_t>(scores.cols()) != m.k()) {
    throw ValidationError("pca_reconstruct: score width does not match component count");
  }
  RowMatrix out = scores * m.components;
  out.rowwise() += m.mean.transpose();
  return out;
}

IcaModel ica_fit(const RowMatrix& X, std::size_t k, std::uint64_t seed, const IcaOptions& opts) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (k < 1 || n <= k) {
    throw ValidationError("ICA needs more samples (" + std::to_string(n) + ") than components (" +
                          std::to_string(k) + ")");
  }
  const PcaModel pca = pca_fit(X, k);
  if (pca.degenerate) {
    throw ValidationError("ICA input has fewer than " + std::to_string(k) +
                          " directions of non-zero variance");
  }

  IcaModel m;
  m.mean = pca.mean;
  m.whitening = pca.explained_variance.cwiseSqrt().cwiseInverse().asDiagonal() * pca.components;
  const RowMatrix Z = (X.rowwise() - m.mean.transpose()) * m.whitening.transpose();  // [n x k]

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RowMatrix W(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
  W = symmetric_decorrelation(W);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    const RowMatrix proj = Z * W.transpose();  // [n x k]
    const RowMatrix g = proj.array().tanh().matrix();
    const Eigen::RowVectorXd g_prime_mean = (1.0 - g.array().square()).colwise().mean().matrix();
    RowMatrix W1 = (g.transpose() * Z) * inv_n - g_prime_mean.transpose().asDiagonal() * W;
    W1 = symmetric_decorrelation(W1);
    const double lim = ((W1 * W.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    W = std::move(W1);
    if (lim < opts.tol) {
      m.unmixing = W;
      m.iterations = it;
      return m;
    }
  }
  throw ConvergenceError("FastICA did not converge within " + std::to_string(opts.max_iter) +
                             " iterations",
                         opts.max_iter);
}

RowMatrix ica_transform(const IcaModel& m, const RowMatrix& X) {
  check_width(X, m.dims(), "ica_transform");
  return ((X.rowwise() - m.mean.transpose()) * m.whitening.transpose()) * m.unmixing.transpose();
}

}  // namespace eegalign::dimred
