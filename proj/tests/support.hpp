// Shared test helpers: random instances and an independent scalar ELBO.
#pragma once

#include "latentline/metrics.hpp"
#include "latentline/vi.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace testsupport {

using namespace latentline;

/// Random dataset with optional missing cells; every view keeps at least one
/// observation.
inline Dataset random_dataset(std::mt19937_64& rng, int n, const std::vector<int>& dims, double miss_rate,
                              const std::vector<bool>& fs) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::vector<ViewSpec> specs;
  std::vector<ViewData> views;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    ViewSpec s;
    s.view_id = static_cast<int>(m) + 1;
    s.dim = dims[m];
    s.feature_selection = fs[m];
    s.learning_rate = LearningRate::constant_rate(1.0);
    specs.push_back(s);
    ViewData v{Matrix(n, dims[m]), Mask(n, dims[m])};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dims[m]; ++j) {
        v.values(i, j) = normal(rng);
        v.mask(i, j) = unif(rng) >= miss_rate;
      }
    }
    v.mask(0, 0) = true;
    views.push_back(std::move(v));
  }
  return validate_dataset(specs, views);
}

/// K = 1, every view one column wide, every posterior parameter randomized.
struct ScalarInstance {
  Dataset data;
  ModelState state;
};

inline ScalarInstance random_scalar_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal;
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const int n = 3 + static_cast<int>(rng() % 6);
  const int views = 1 + static_cast<int>(rng() % 2);
  std::vector<bool> fs;
  for (int m = 0; m < views; ++m) fs.push_back(m == 0 || u(rng) < 0.5);
  Dataset data = random_dataset(rng, n, std::vector<int>(static_cast<std::size_t>(views), 1), 0.3, fs);

  Hyperparameters h;
  h.k_init = 1;
  auto prior = [&] { return u(rng) < 0.5 ? 1e-14 : between(0.1, 2.0); };
  h.a_alpha = prior();
  h.b_alpha = prior();
  h.a_tau = prior();
  h.b_tau = prior();
  h.a_gamma = prior();
  h.b_gamma = prior();
  ModelState s = init_state(data, h, seed);
  s.iteration = 1;
  s.z.mean = Matrix::NullaryExpr(n, 1, [&] { return 2.0 * normal(rng); });
  s.z.covariances = {Matrix::Constant(1, 1, between(0.1, 2.0))};
  auto gamma = [&](Eigen::Index size) {
    return GammaPosterior{Vector::NullaryExpr(size, [&] { return between(0.5, 5.0); }),
                          Vector::NullaryExpr(size, [&] { return between(0.5, 5.0); })};
  };
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    auto& v = s.views[m];
    v.w.mean(0, 0) = 2.0 * normal(rng);
    for (auto& c : v.w.covariances) c(0, 0) = between(0.1, 2.0);
    v.alpha = gamma(1);
    v.tau = gamma(1);
    if (v.gamma) v.gamma = gamma(1);
    const auto& mask = data.views()[m].mask;
    for (int i = 0; i < n; ++i) {
      if (!mask(i, 0)) v.missing.mean(i, 0) = 2.0 * normal(rng);
    }
    v.missing.variance = between(0.1, 2.0);
  }
  return {std::move(data), std::move(s)};
}

/// The evidence lower bound for a K = 1 state whose views are all one column
/// wide, written out term by term.
inline double scalar_elbo(const ModelState& s) {
  const double log2pi = std::log(2.0 * M_PI);
  const double e = std::exp(1.0);
  auto e_log = [](double a, double b) { return boost::math::digamma(a) - std::log(b); };
  auto gamma_terms = [&](double a, double b, double a0, double b0) {
    const double mean = a / b;
    const double prior = a0 * std::log(b0) - std::lgamma(a0) + (a0 - 1.0) * e_log(a, b) - b0 * mean;
    const double entropy = a - std::log(b) + std::lgamma(a) + (1.0 - a) * boost::math::digamma(a);
    return prior + entropy;
  };
  const auto n = s.z.mean.rows();
  const double var_z = s.z.covariances.front()(0, 0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = s.z.mean(i, 0);
    total += -0.5 * log2pi - 0.5 * (mu * mu + var_z) + 0.5 * std::log(2.0 * M_PI * e * var_z);
  }
  const auto& h = s.hyper;
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    const auto& v = s.views[m];
    const double mw = v.w.mean(0, 0);
    const double sw = v.w.covariances.front()(0, 0);
    const double at = v.tau.shape(0), bt = v.tau.rate(0);
    const double aa = v.alpha.shape(0), ba = v.alpha.rate(0);
    double sq = static_cast<double>(v.missing.missing_count) * v.missing.variance;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = v.missing.mean(i, 0), mu = s.z.mean(i, 0);
      sq += x * x - 2.0 * x * mu * mw + (mu * mu + var_z) * (mw * mw + sw);
    }
    total += 0.5 * static_cast<double>(n) * (e_log(at, bt) - log2pi) - 0.5 * (at / bt) * sq;
    total += 0.5 * static_cast<double>(v.missing.missing_count) * std::log(2.0 * M_PI * e * v.missing.variance);
    double log_g = 0.0, g = 1.0;
    if (v.gamma) {
      log_g = e_log(v.gamma->shape(0), v.gamma->rate(0));
      g = v.gamma->shape(0) / v.gamma->rate(0);
      total += gamma_terms(v.gamma->shape(0), v.gamma->rate(0), h.a_gamma, h.b_gamma);
    }
    total += 0.5 * (log_g + e_log(aa, ba)) - 0.5 * log2pi - 0.5 * g * (aa / ba) * (mw * mw + sw);
    total += 0.5 * std::log(2.0 * M_PI * e * sw);
    total += gamma_terms(aa, ba, h.a_alpha, h.b_alpha) + gamma_terms(at, bt, h.a_tau, h.b_tau);
  }
  return total;
}

/// argmax of f on [lo, hi]: Brent's method, then a root of the central
/// difference derivative near the Brent point (Brent alone resolves a flat
/// optimum only to about sqrt(machine epsilon)).
inline double brent_argmax(const std::function<double(double)>& f, double lo, double hi) {
  const double x0 = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi, 52).first;
  const double h = 1e-4 * std::max(1.0, std::abs(x0));
  auto slope = [&](double x) { return (f(x + h) - f(x - h)) / (2.0 * h); };
  const double span = 1e-3 * std::max(1.0, std::abs(x0));
  const double a = std::max(lo, x0 - span), b = std::min(hi, x0 + span);
  const double fa = slope(a), fb = slope(b);
  if (!(fa > 0.0 && fb < 0.0)) return x0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(slope, a, b, fa, fb,
                                                    boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

/// argmax over (shape, rate) of a Gamma factor: nested Brent searches over
/// log shape and log mean, which decouples the two directions.
inline std::pair<double, double> gamma_argmax(const std::function<double(double, double)>& f) {
  auto best_mean = [&](double shape) {
    return std::exp(brent_argmax([&](double lm) { return f(shape, shape / std::exp(lm)); }, -30.0, 30.0));
  };
  const double shape =
      std::exp(brent_argmax([&](double ls) { return f(std::exp(ls), std::exp(ls) / best_mean(std::exp(ls))); },
                            -12.0, 12.0));
  return {shape, shape / best_mean(shape)};
}

/// |a - b| <= tol * max(1, |b|).
inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

enum class Coordinate { z, w, alpha, gamma, tau };

/// Runs one update on a random scalar instance and checks every parameter it
/// sets against numerical maximization of scalar_elbo. Returns the largest
/// relative deviation.
inline double coordinate_deviation(Coordinate which, std::uint64_t seed) {
  auto inst = random_scalar_instance(seed);
  ModelState& base = inst.state;
  std::size_t view = 0;
  if (which == Coordinate::gamma) {
    for (std::size_t m = 0; m < base.views.size(); ++m) {
      if (base.views[m].gamma) view = m;
    }
  } else if (base.views.size() > 1) {
    view = seed % base.views.size();
  }
  auto dev = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  double worst = 0.0;
  ModelState updated = base;
  switch (which) {
    case Coordinate::z: {
      update_z(updated);
      for (Eigen::Index i = 0; i < base.z.mean.rows(); ++i) {
        const double opt = brent_argmax(
            [&](double mu) {
              ModelState t = base;
              t.z.mean(i, 0) = mu;
              return scalar_elbo(t);
            },
            -100.0, 100.0);
        worst = std::max(worst, dev(updated.z.mean(i, 0), opt));
      }
      const double opt_var = std::exp(brent_argmax(
          [&](double lv) {
            ModelState t = base;
            t.z.covariances.front()(0, 0) = std::exp(lv);
            return scalar_elbo(t);
          },
          -30.0, 10.0));
      worst = std::max(worst, dev(updated.z.covariances.front()(0, 0), opt_var));
      break;
    }
    case Coordinate::w: {
      update_w(updated, view);
      const double opt_mean = brent_argmax(
          [&](double mw) {
            ModelState t = base;
            t.views[view].w.mean(0, 0) = mw;
            return scalar_elbo(t);
          },
          -100.0, 100.0);
      const double opt_var = std::exp(brent_argmax(
          [&](double lv) {
            ModelState t = base;
            for (auto& c : t.views[view].w.covariances) c(0, 0) = std::exp(lv);
            return scalar_elbo(t);
          },
          -30.0, 10.0));
      worst = std::max(worst, dev(updated.views[view].w.mean(0, 0), opt_mean));
      worst = std::max(worst, dev(updated.views[view].w.covariances.front()(0, 0), opt_var));
      break;
    }
    case Coordinate::alpha:
    case Coordinate::gamma:
    case Coordinate::tau: {
      auto slot = [&](ModelState& t) -> GammaPosterior& {
        auto& v = t.views[view];
        return which == Coordinate::alpha ? v.alpha : (which == Coordinate::tau ? v.tau : *v.gamma);
      };
      if (which == Coordinate::alpha) update_alpha(updated, view);
      if (which == Coordinate::gamma) update_gamma(updated, view);
      if (which == Coordinate::tau) update_tau(updated, view);
      const auto [shape, rate] = gamma_argmax([&](double a, double b) {
        ModelState t = base;
        slot(t).shape(0) = a;
        slot(t).rate(0) = b;
        return scalar_elbo(t);
      });
      worst = std::max(worst, dev(slot(updated).shape(0), shape));
      worst = std::max(worst, dev(slot(updated).rate(0), rate));
      break;
    }
  }
  return worst;
}

/// P(pos > neg) + P(pos == neg) / 2 over every positive/negative pair.
inline double pair_auc(const std::vector<double>& scores, const std::vector<bool>& is_class) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_class[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (is_class[j]) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

inline double pair_mauc(const Matrix& scores, const std::vector<int>& labels, bool weighted) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    std::vector<double> col;
    std::vector<bool> is_class;
    double count = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      col.push_back(scores(static_cast<Eigen::Index>(i), c));
      is_class.push_back(labels[i] == c);
      count += labels[i] == c;
    }
    const double auc = pair_auc(col, is_class);
    total += weighted ? count * auc / static_cast<double>(labels.size()) : auc / static_cast<double>(scores.cols());
  }
  return total;
}

inline double recall_mean(const std::vector<int>& predicted, const std::vector<int>& truth) {
  double total = 0.0;
  int classes = 0;
  for (int c = 0; c < 10; ++c) {
    double hits = 0.0, n = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != c) continue;
      n += 1.0;
      hits += predicted[i] == c;
    }
    if (n > 0.0) {
      total += hits / n;
      ++classes;
    }
  }
  return total / classes;
}

/// Largest gap between the library metrics and the brute-force versions on
/// one random instance (size <= 20, ties likely, three classes).
inline double metric_instance_deviation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = 3 + static_cast<int>(rng() % 18);
  const bool coarse = rng() % 2 == 0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto score = [&] { return coarse ? std::floor(u(rng) * 4.0) / 4.0 : u(rng); };
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < 3 ? i : static_cast<int>(rng() % 3);
  std::shuffle(labels.begin(), labels.end(), rng);
  Matrix scores = Matrix::NullaryExpr(n, 3, score);
  std::vector<int> predicted(static_cast<std::size_t>(n));
  for (auto& p : predicted) p = static_cast<int>(rng() % 3);
  std::vector<double> truth(static_cast<std::size_t>(n)), guess(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = 10.0 * u(rng) - 5.0;
    guess[static_cast<std::size_t>(i)] = 10.0 * u(rng) - 5.0;
  }

  double worst = 0.0;
  double brute_mae = 0.0;
  for (int i = 0; i < n; ++i) brute_mae += std::abs(truth[static_cast<std::size_t>(i)] - guess[static_cast<std::size_t>(i)]);
  brute_mae /= n;
  worst = std::max(worst, std::abs(mae(truth, guess) - brute_mae));

  std::vector<double> col(scores.col(0).data(), scores.col(0).data() + n);
  std::vector<bool> is_first;
  for (int l : labels) is_first.push_back(l == 0);
  worst = std::max(worst, std::abs(auc_one_vs_rest(col, is_first) - pair_auc(col, is_first)));
  worst = std::max(worst, std::abs(mauc(scores, labels, true) - pair_mauc(scores, labels, true)));
  worst = std::max(worst, std::abs(mauc(scores, labels, false) - pair_mauc(scores, labels, false)));
  worst = std::max(worst, std::abs(balanced_accuracy(predicted, labels) - recall_mean(predicted, labels)));
  return worst;
}

}  // namespace testsupport
