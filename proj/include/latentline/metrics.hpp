#pragma once

#include "latentline/core.hpp"

#include <span>
#include <vector>

namespace latentline {

/// Mean absolute error.
double mae(std::span<const double> truth, std::span<const double> predicted);

/// Rank AUC, P(pos > neg) + P(pos == neg) / 2. Throws InputError when
/// either class is absent.
double auc_one_vs_rest(std::span<const double> scores, const std::vector<bool>& is_class);

/// Multiclass AUC: sum_c (N_c / N) AUC_c over one-vs-rest AUCs. With
/// `class_weighted` false the plain mean over classes is returned instead.
double mauc(const Matrix& scores, std::span<const int> labels, bool class_weighted = true);

/// Mean recall over the classes present in `truth`.
double balanced_accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace latentline
