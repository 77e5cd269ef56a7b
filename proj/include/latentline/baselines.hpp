// Comparison stack: simple imputers followed by ridge regression or
// one-vs-all logistic regression, with penalties chosen by k-fold CV.
#pragma once

#include "latentline/core.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace latentline {

enum class ImputationStrategy { zero, mean, median, most_frequent, temporal };

const char* to_string(ImputationStrategy s);
ImputationStrategy parse_imputation(const std::string& text);
inline constexpr ImputationStrategy kAllImputers[] = {ImputationStrategy::zero, ImputationStrategy::mean,
                                                      ImputationStrategy::median, ImputationStrategy::most_frequent,
                                                      ImputationStrategy::temporal};

/// Provenance of matrix cells for temporal imputation.
struct CellContext {
  static constexpr int kNoMonth = std::numeric_limits<int>::min();
  std::vector<std::string> row_subject;
  std::vector<std::string> col_variable;
  Eigen::MatrixXi month;  // kNoMonth where the cell maps to no visit
};

/// Fills every unobserved cell of `apply`. Column statistics come from the
/// observed cells of `train` only. Temporal imputation uses the mean of the
/// same subject's observed values of that variable at strictly earlier
/// months (pooled over both matrices, one value per month) and falls back to
/// the train column mean. Contexts are required for temporal imputation.
Matrix impute(const ViewData& train, const ViewData& apply, ImputationStrategy strategy,
              const CellContext* train_context = nullptr, const CellContext* apply_context = nullptr);

/// 10^e for e = -20, -17.8, ..., 2.
std::vector<double> penalty_grid();

/// Solution of (X^T X + alpha I) w = X^T y.
Vector ridge_solve(const Matrix& x, const Vector& y, double alpha);

/// Deterministic fold assignment; stratified by label when `labels` is given.
std::vector<int> make_folds(Eigen::Index n, int folds, std::uint64_t seed, const std::vector<int>* labels = nullptr);

struct FeatureScaling {
  Vector mean, scale;
  static FeatureScaling fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct RidgeModel {
  FeatureScaling scaling;
  Vector weights;
  double intercept = 0.0;
  double alpha = 0.0;
  std::vector<double> cv_score;  // mean fold MAE per grid value

  Vector predict(const Matrix& x) const;
};

/// Ridge on standardized features with an unpenalized intercept.
RidgeModel ridge_fit(const Matrix& x, const Vector& y, double alpha);
/// Picks the grid value with the lowest mean fold MAE (ties to the smaller
/// penalty) and refits on all rows.
RidgeModel ridge_fit_cv(const Matrix& x, const Vector& y, int folds = 10, std::uint64_t seed = 0);

struct LogisticModel {
  FeatureScaling scaling;
  Matrix weights;     // features x classes
  Vector intercepts;  // classes
  double alpha = 0.0;
  std::vector<double> cv_score;  // mean fold balanced accuracy per grid value

  /// Per-class sigmoid scores, rows normalized to sum 1.
  Matrix scores(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
};

/// One-vs-all L2-penalized logistic regression fitted by IRLS. Labels are
/// class indices in [0, classes).
LogisticModel logistic_fit(const Matrix& x, const std::vector<int>& labels, int classes, double alpha);
LogisticModel logistic_fit_cv(const Matrix& x, const std::vector<int>& labels, int classes, int folds = 10,
                              std::uint64_t seed = 0);

}  // namespace latentline
