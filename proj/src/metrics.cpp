#include "latentline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace latentline {

double mae(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw InputError("mae: length mismatch");
  if (truth.empty()) throw InputError("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!std::isfinite(truth[i]) || !std::isfinite(predicted[i])) throw InputError("mae: non-finite value");
    total += std::abs(truth[i] - predicted[i]);
  }
  return total / static_cast<double>(truth.size());
}

double auc_one_vs_rest(std::span<const double> scores, const std::vector<bool>& is_class) {
  if (scores.size() != is_class.size()) throw InputError("auc: length mismatch");
  const auto pos = static_cast<double>(std::count(is_class.begin(), is_class.end(), true));
  const double neg = static_cast<double>(is_class.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw InputError("auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with midranks for tie groups.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (is_class[order[t]]) rank_sum += midrank;
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double mauc(const Matrix& scores, std::span<const int> labels, bool class_weighted) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) throw InputError("mauc: length mismatch");
  if (labels.empty()) throw InputError("mauc: empty input");
  std::map<int, std::size_t> counts;
  for (int l : labels) {
    if (l < 0 || l >= scores.cols()) throw InputError("mauc: label without a score column");
    ++counts[l];
  }
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    if (counts.count(static_cast<int>(c)) == 0) {
      throw InputError("mauc: class " + std::to_string(c) + " has no samples");
    }
  }
  double total = 0.0;
  std::vector<double> column(labels.size());
  for (const auto& [c, count] : counts) {
    std::vector<bool> is_class(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      is_class[i] = labels[i] == c;
      column[i] = scores(static_cast<Eigen::Index>(i), c);
    }
    const double auc = auc_one_vs_rest(column, is_class);
    total += class_weighted ? static_cast<double>(count) * auc : auc;
  }
  return class_weighted ? total / static_cast<double>(labels.size()) : total / static_cast<double>(counts.size());
}

double balanced_accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw InputError("balanced_accuracy: length mismatch");
  if (truth.empty()) throw InputError("balanced_accuracy: empty input");
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [hits, total] = per_class[truth[i]];
    ++total;
    if (predicted[i] == truth[i]) ++hits;
  }
  double sum = 0.0;
  for (const auto& [c, ht] : per_class) sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return sum / static_cast<double>(per_class.size());
}

}  // namespace latentline
