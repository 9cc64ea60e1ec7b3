#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eegalign/core.hpp"

namespace eegalign::align {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of 0..n-1; the first round(ratio*n) indices (sorted) train.
Split split_train_test(std::size_t n, double ratio = 0.8, std::uint64_t seed = 0);

// Seeded k-fold assignment of 0..n-1 into near-equal contiguous chunks of a shuffle.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t folds, std::uint64_t seed);

struct RidgeModel {
  RowMatrix W;       // [p x q]
  Vector intercept;  // q
  double alpha = 1.0;

  std::size_t p() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t q() const { return static_cast<std::size_t>(W.cols()); }
};

// W = (Xc'Xc + alpha I)^-1 Xc'Yc on column-centered data, solved by Cholesky
// (LDLT fallback). The intercept restores the column means.
RidgeModel ridge_fit(const RowMatrix& X, const RowMatrix& Y, double alpha);

RowMatrix predict(const RidgeModel& m, const RowMatrix& X);

struct Score {
  double r2 = 0;
  double corr = 0;
  std::size_t targets = 0;  // targets with non-zero variance that entered the means
};

// Uniform mean over targets with SST > 0 of R^2 = 1 - SSE/SST and Pearson r.
// A constant prediction column contributes r = 0.
Score score_predictions(const RowMatrix& predicted, const RowMatrix& Y);
Score score(const RidgeModel& m, const RowMatrix& X, const RowMatrix& Y);

// 10 log-spaced values in [1e-3, 1e6].
std::vector<double> default_alphas();

struct CvRow {
  std::size_t fold = 0;
  double alpha = 0;
  double r2 = 0;
};

struct CvSummary {
  double alpha = 0;
  double mean_r2 = 0;
  double sd_r2 = 0;
};

struct CvTable {
  std::vector<CvRow> rows;         // one per (fold, alpha)
  std::vector<CvSummary> summary;  // one per alpha, grid order
};

struct CvResult {
  RidgeModel model;  // refit on all rows with the chosen alpha
  double alpha = 0;
  CvTable table;
};

// K-fold cross-validation over the alpha grid; picks the alpha with the best
// mean validation R^2 (ties go to the smallest alpha) and refits on all rows.
CvResult ridge_cv(const RowMatrix& X, const RowMatrix& Y, std::span<const double> alphas,
                  std::size_t folds = 5, std::uint64_t seed = 0);

}  // namespace eegalign::align
