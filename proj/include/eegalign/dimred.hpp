#pragma once

#include <cstdint>
#include <string_view>

#include "eegalign/core.hpp"

namespace eegalign::dimred {

enum class Method { Pca, Ica };
std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct PcaModel {
  Vector mean;                      // D
  RowMatrix components;             // [k x D], orthonormal rows
  Vector explained_variance;        // k, sample variance (n - 1) along each component
  Vector explained_variance_ratio;  // k, nonincreasing
  // Set when the data has less than k directions of non-zero variance; the
  // affected component rows are zero.
  bool degenerate = false;

  std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
};

// Centered PCA of X [n x D]. Components are the top-k right singular vectors,
// signed so the largest-magnitude coordinate is positive.
PcaModel pca_fit(const RowMatrix& X, std::size_t k = kDefaultComponents);
RowMatrix pca_transform(const PcaModel& m, const RowMatrix& X);
RowMatrix pca_reconstruct(const PcaModel& m, const RowMatrix& scores);

struct IcaOptions {
  double tol = 1e-4;
  std::size_t max_iter = 500;
};

struct IcaModel {
  Vector mean;          // D
  RowMatrix whitening;  // [k x D]
  RowMatrix unmixing;   // [k x k]
  std::size_t iterations = 0;

  std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t k() const { return static_cast<std::size_t>(unmixing.rows()); }
};

// PCA whitening to k dimensions followed by symmetric FastICA with the
// log-cosh contrast. Throws ConvergenceError after max_iter iterations.
IcaModel ica_fit(const RowMatrix& X, std::size_t k, std::uint64_t seed,
                 const IcaOptions& opts = {});
RowMatrix ica_transform(const IcaModel& m, const RowMatrix& X);

}  // namespace eegalign::dimred
