#include "latentline/baselines.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "latentline/metrics.hpp"

namespace latentline {

const char* to_string(ImputationStrategy s) {
  switch (s) {
    case ImputationStrategy::zero: return "zero";
    case ImputationStrategy::mean: return "mean";
    case ImputationStrategy::median: return "median";
    case ImputationStrategy::most_frequent: return "most_frequent";
    case ImputationStrategy::temporal: return "temporal";
  }
  return "?";
}

ImputationStrategy parse_imputation(const std::string& text) {
  for (auto s : kAllImputers) {
    if (text == to_string(s)) return s;
  }
  throw InputError("unknown imputation strategy '" + text + "'");
}

namespace {

std::vector<double> observed_column(const ViewData& v, Eigen::Index c) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    if (v.mask(i, c)) out.push_back(v.values(i, c));
  }
  return out;
}

double column_mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double column_median(std::vector<double> x) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  const std::size_t h = x.size() / 2;
  return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

double column_mode(std::vector<double> x) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  double best = x.front();
  std::size_t best_run = 0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    if (j - i > best_run) {  // strict: ties keep the smaller value
      best_run = j - i;
      best = x[i];
    }
    i = j;
  }
  return best;
}

void check_context(const CellContext& ctx, const ViewData& v) {
  if (static_cast<Eigen::Index>(ctx.row_subject.size()) != v.rows() ||
      static_cast<Eigen::Index>(ctx.col_variable.size()) != v.cols() || ctx.month.rows() != v.rows() ||
      ctx.month.cols() != v.cols()) {
    throw InputError("impute: cell context does not match the matrix shape");
  }
}

using History = std::map<std::pair<std::string, std::string>, std::map<int, double>>;

void collect_history(History& h, const ViewData& v, const CellContext& ctx) {
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const int month = ctx.month(i, j);
      if (!v.mask(i, j) || month == CellContext::kNoMonth) continue;
      h[{ctx.row_subject[static_cast<std::size_t>(i)], ctx.col_variable[static_cast<std::size_t>(j)]}].emplace(
          month, v.values(i, j));
    }
  }
}

}  // namespace

Matrix impute(const ViewData& train, const ViewData& apply, ImputationStrategy strategy,
              const CellContext* train_context, const CellContext* apply_context) {
  if (train.cols() != apply.cols()) throw InputError("impute: train and apply widths differ");
  const Eigen::Index cols = apply.cols();
  Vector fill(cols);
  Vector means(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto x = observed_column(train, c);
    means(c) = column_mean(x);
    switch (strategy) {
      case ImputationStrategy::zero: fill(c) = 0.0; break;
      case ImputationStrategy::mean:
      case ImputationStrategy::temporal: fill(c) = means(c); break;
      case ImputationStrategy::median: fill(c) = column_median(x); break;
      case ImputationStrategy::most_frequent: fill(c) = column_mode(x); break;
    }
  }
  Matrix out = apply.values;
  if (strategy != ImputationStrategy::temporal) {
    for (Eigen::Index i = 0; i < apply.rows(); ++i) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!apply.mask(i, c)) out(i, c) = fill(c);
      }
    }
    return out;
  }

  if (!train_context || !apply_context) throw InputError("impute: temporal strategy needs subject/month metadata");
  check_context(*train_context, train);
  check_context(*apply_context, apply);
  History history;
  collect_history(history, train, *train_context);
  collect_history(history, apply, *apply_context);
  for (Eigen::Index i = 0; i < apply.rows(); ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (apply.mask(i, c)) continue;
      out(i, c) = fill(c);
      const int month = apply_context->month(i, c);
      if (month == CellContext::kNoMonth) continue;
      auto it = history.find({apply_context->row_subject[static_cast<std::size_t>(i)],
                              apply_context->col_variable[static_cast<std::size_t>(c)]});
      if (it == history.end()) continue;
      double sum = 0.0;
      int count = 0;
      for (auto m = it->second.begin(); m != it->second.end() && m->first < month; ++m) {
        sum += m->second;
        ++count;
      }
      if (count > 0) out(i, c) = sum / count;
    }
  }
  return out;
}

std::vector<double> penalty_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(std::pow(10.0, -20.0 + 2.2 * i));
  return grid;
}

namespace {

/// Ridge weights for every grid penalty from one thin SVD.
class RidgePath {
 public:
  RidgePath(const Matrix& x, const Vector& y) : svd_(x, Eigen::ComputeThinU | Eigen::ComputeThinV) {
    uty_ = svd_.matrixU().transpose() * y;
    const auto& s = svd_.singularValues();
    cutoff_ = s.size() ? s(0) * 1e-12 : 0.0;
  }
  Vector weights(double alpha) const {
    const auto& s = svd_.singularValues();
    Vector shrink(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      shrink(i) = s(i) > cutoff_ ? s(i) / (s(i) * s(i) + alpha) : 0.0;
    }
    return svd_.matrixV() * shrink.cwiseProduct(uty_);
  }

 private:
  Eigen::BDCSVD<Matrix> svd_;
  Vector uty_;
  double cutoff_ = 0.0;
};

}  // namespace

Vector ridge_solve(const Matrix& x, const Vector& y, double alpha) {
  if (x.rows() != y.size()) throw InputError("ridge: X and y lengths differ");
  if (!(alpha > 0.0)) throw InputError("ridge: penalty must be positive");
  return RidgePath(x, y).weights(alpha);
}

std::vector<int> make_folds(Eigen::Index n, int folds, std::uint64_t seed, const std::vector<int>* labels) {
  if (folds < 2) throw InputError("folds must be >= 2");
  if (n < folds) throw InputError("fewer samples (" + std::to_string(n) + ") than folds (" + std::to_string(folds) + ")");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (labels) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return (*labels)[a] < (*labels)[b]; });
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return fold;
}

FeatureScaling FeatureScaling::fit(const Matrix& x) {
  FeatureScaling s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale = Vector::Ones(x.cols());
  if (x.rows() > 1) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double sd = std::sqrt((x.col(c).array() - s.mean(c)).square().sum() / (n - 1.0));
      if (sd > 1e-12 * (1.0 + std::abs(s.mean(c)))) s.scale(c) = sd;
    }
  }
  return s;
}

Matrix FeatureScaling::apply(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Vector RidgeModel::predict(const Matrix& x) const {
  return (scaling.apply(x) * weights).array() + intercept;
}

namespace {

Matrix select_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Vector select_rows(const Vector& y, const std::vector<Eigen::Index>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

RidgeModel ridge_from_path(const FeatureScaling& scaling, const RidgePath& path, double y_mean, double alpha) {
  RidgeModel m;
  m.scaling = scaling;
  m.alpha = alpha;
  m.weights = path.weights(alpha);
  m.intercept = y_mean;
  return m;
}

std::size_t pick(const std::vector<double>& score, bool maximize) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < score.size(); ++i) {
    if (maximize ? score[i] > score[best] : score[i] < score[best]) best = i;
  }
  return best;
}

}  // namespace

RidgeModel ridge_fit(const Matrix& x, const Vector& y, double alpha) {
  if (x.rows() != y.size()) throw InputError("ridge: X and y lengths differ");
  if (x.rows() == 0) throw InputError("ridge: no samples");
  const auto scaling = FeatureScaling::fit(x);
  const double y_mean = y.mean();
  const RidgePath path(scaling.apply(x), y.array() - y_mean);
  return ridge_from_path(scaling, path, y_mean, alpha);
}

RidgeModel ridge_fit_cv(const Matrix& x, const Vector& y, int folds, std::uint64_t seed) {
  if (x.rows() != y.size()) throw InputError("ridge: X and y lengths differ");
  const auto fold = make_folds(x.rows(), folds, seed);
  const auto grid = penalty_grid();
  std::vector<double> score(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < x.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    const Matrix xtr = select_rows(x, tr);
    const Vector ytr = select_rows(y, tr);
    const auto scaling = FeatureScaling::fit(xtr);
    const double y_mean = ytr.mean();
    const RidgePath path(scaling.apply(xtr), ytr.array() - y_mean);
    const Matrix xte = select_rows(x, te);
    const Vector yte = select_rows(y, te);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const Vector pred = ridge_from_path(scaling, path, y_mean, grid[g]).predict(xte);
      score[g] += mae(std::span(yte.data(), static_cast<std::size_t>(yte.size())),
                      std::span(pred.data(), static_cast<std::size_t>(pred.size()))) / folds;
    }
  }
  RidgeModel m = ridge_fit(x, y, grid[pick(score, false)]);
  m.cv_score = score;
  return m;
}

namespace {

double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

/// Penalized binary logistic regression on [1, X] (intercept unpenalized).
Vector irls(const Matrix& design, const Vector& y, double alpha) {
  const Eigen::Index p = design.cols();
  Vector beta = Vector::Zero(p);
  auto objective = [&](const Vector& b) {
    const Vector eta = design * b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) loss += log1pexp(eta(i)) - y(i) * eta(i);
    return loss + 0.5 * alpha * b.tail(p - 1).squaredNorm();
  };
  double current = objective(beta);
  for (int it = 0; it < 30; ++it) {
    const Vector eta = design * beta;
    Vector prob(eta.size()), weight(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob(i) = sigmoid(eta(i));
      weight(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    Vector grad = design.transpose() * (prob - y);
    grad.tail(p - 1) += alpha * beta.tail(p - 1);
    Matrix hess = design.transpose() * weight.asDiagonal() * design;
    hess.diagonal().tail(p - 1).array() += alpha;
    hess.diagonal().array() += 1e-10;
    const Vector step = hess.ldlt().solve(grad);
    double t = 1.0;
    Vector next = beta - step;
    double value = objective(next);
    while (value > current && t > 1e-4) {
      t *= 0.5;
      next = beta - t * step;
      value = objective(next);
    }
    if (value > current) break;
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = std::move(next);
    current = value;
    if (change < 1e-7) break;
  }
  return beta;
}

Matrix with_intercept(const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

}  // namespace

Matrix LogisticModel::scores(const Matrix& x) const {
  const Matrix eta = (scaling.apply(x) * weights).rowwise() + intercepts.transpose();
  Matrix s = eta.unaryExpr([](double t) { return sigmoid(t); });
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double total = s.row(i).sum();
    if (total > 0.0) {
      s.row(i) /= total;
    } else {
      s.row(i).setConstant(1.0 / static_cast<double>(s.cols()));
    }
  }
  return s;
}

std::vector<int> LogisticModel::predict(const Matrix& x) const {
  const Matrix s = scores(x);
  std::vector<int> out;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < s.cols(); ++j) {
      if (s(i, j) > s(i, best)) best = j;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

namespace {

LogisticModel logistic_fit_unchecked(const Matrix& x, const std::vector<int>& labels, int classes, double alpha) {
  LogisticModel m;
  m.alpha = alpha;
  m.scaling = FeatureScaling::fit(x);
  const Matrix design = with_intercept(m.scaling.apply(x));
  m.weights.resize(x.cols(), classes);
  m.intercepts.resize(classes);
  for (int c = 0; c < classes; ++c) {
    Vector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
    const Vector beta = irls(design, y, alpha);
    m.intercepts(c) = beta(0);
    m.weights.col(c) = beta.tail(x.cols());
  }
  return m;
}

void check_labels(const Matrix& x, const std::vector<int>& labels, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw InputError("logistic: X and labels lengths differ");
  if (classes < 2) throw InputError("logistic: need at least 2 classes");
  std::set<int> present;
  for (int l : labels) {
    if (l < 0 || l >= classes) throw InputError("logistic: label out of range");
    present.insert(l);
  }
  if (present.size() < 2) throw InputError("logistic: training set holds a single class");
}

}  // namespace

LogisticModel logistic_fit(const Matrix& x, const std::vector<int>& labels, int classes, double alpha) {
  check_labels(x, labels, classes);
  return logistic_fit_unchecked(x, labels, classes, alpha);
}

LogisticModel logistic_fit_cv(const Matrix& x, const std::vector<int>& labels, int classes, int folds,
                              std::uint64_t seed) {
  check_labels(x, labels, classes);
  const auto fold = make_folds(x.rows(), folds, seed, &labels);
  const auto grid = penalty_grid();
  std::vector<double> score(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < x.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    std::vector<int> ltr, lte;
    for (auto i : tr) ltr.push_back(labels[static_cast<std::size_t>(i)]);
    for (auto i : te) lte.push_back(labels[static_cast<std::size_t>(i)]);
    const Matrix xtr = select_rows(x, tr);
    const Matrix xte = select_rows(x, te);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto pred = logistic_fit_unchecked(xtr, ltr, classes, grid[g]).predict(xte);
      score[g] += balanced_accuracy(pred, lte) / folds;
    }
  }
  LogisticModel m = logistic_fit_unchecked(x, labels, classes, grid[pick(score, true)]);
  m.cv_score = score;
  return m;
}

}  // namespace latentline
