#include "latentline/vi.hpp"

#include "latentline/linalg.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace latentline {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double gamma_log_prior(const GammaPosterior& q, double a, double b) {
  const auto mom = gamma_expectations(q);
  double out = 0.0;
  for (Eigen::Index i = 0; i < q.shape.size(); ++i) {
    out += a * std::log(b) - std::lgamma(a) + (a - 1.0) * mom.mean_log(i) - b * mom.mean(i);
  }
  return out;
}

double gamma_entropy(const GammaPosterior& q) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < q.shape.size(); ++i) {
    const double a = q.shape(i);
    out += a - std::log(q.rate(i)) + std::lgamma(a) + (1.0 - a) * boost::math::digamma(a);
  }
  return out;
}

/// E[w_dk^2] for every (d, k).
Matrix w_second_moments(const GaussianPosterior& w) {
  Matrix sq = w.mean.cwiseAbs2();
  for (Eigen::Index d = 0; d < w.mean.rows(); ++d) sq.row(d) += w.covariance(d).diagonal().transpose();
  return sq;
}

Vector gamma_means_or_ones(const ViewPosterior& v, Eigen::Index dim) {
  return v.gamma ? v.gamma->mean() : Vector::Ones(dim);
}

/// sum_{n,d} E[(x_nd - z_n w_d^T)^2] over every cell of the view.
double expected_squared_error(const ModelState& s, const ViewPosterior& v, const Matrix& zz) {
  const Matrix& x = v.missing.mean;
  const Matrix xz = x.transpose() * s.z.mean;  // D x K
  const double x2 = x.squaredNorm() + static_cast<double>(v.missing.missing_count) * v.missing.variance;
  const double cross = (xz.array() * v.w.mean.array()).sum();
  const double quad = (zz.array() * v.w.second_moment().array()).sum();
  return x2 - 2.0 * cross + quad;
}

void remove_index(Vector& v, Eigen::Index k) {
  const Eigen::Index n = v.size();
  Vector out(n - 1);
  out << v.head(k), v.tail(n - k - 1);
  v = std::move(out);
}

void remove_column(Matrix& m, Eigen::Index k) {
  const Eigen::Index c = m.cols();
  Matrix out(m.rows(), c - 1);
  out << m.leftCols(k), m.rightCols(c - k - 1);
  m = std::move(out);
}

void remove_row_col(Matrix& m, Eigen::Index k) {
  remove_column(m, k);
  m.transposeInPlace();
  remove_column(m, k);
  m.transposeInPlace();
}

}  // namespace

const char* to_string(HaltReason reason) {
  return reason == HaltReason::elbo_converged ? "elbo_converged" : "max_iter";
}

ModelState init_state(const Dataset& data, const Hyperparameters& hyper, std::uint64_t seed) {
  hyper.validate();
  ModelState s;
  s.hyper = hyper;
  s.hyper.seed = seed;
  s.specs = data.specs();
  const Eigen::Index n = data.samples();
  const int k = hyper.k_init;
  s.k_current = k;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  s.z.mean = Matrix::NullaryExpr(n, k, [&]() { return normal(rng); });
  s.z.covariances = {Matrix::Identity(k, k)};

  for (std::size_t m = 0; m < data.view_count(); ++m) {
    const auto& spec = s.specs[m];
    const auto& view = data.views()[m];
    ViewPosterior v;
    const double sd = 1.0 / std::sqrt(static_cast<double>(spec.dim));
    v.w.mean = Matrix::NullaryExpr(spec.dim, k, [&]() { return sd * normal(rng); });
    if (spec.feature_selection) {
      v.w.covariances.assign(static_cast<std::size_t>(spec.dim), Matrix::Identity(k, k));
      v.gamma = GammaPosterior::prior(spec.dim, hyper.a_gamma, hyper.b_gamma);
    } else {
      v.w.covariances = {Matrix::Identity(k, k)};
    }
    v.alpha = GammaPosterior::prior(k, hyper.a_alpha, hyper.b_alpha);
    v.tau = GammaPosterior::prior(1, hyper.a_tau, hyper.b_tau);
    v.missing.mean = view.mask.select(view.values, Matrix::Zero(n, spec.dim));
    v.missing.variance = 1.0;
    v.missing.missing_count = view.mask.size() - view.mask.count();
    s.views.push_back(std::move(v));
  }
  return s;
}

void update_z(ModelState& s) {
  const int k = s.k_current;
  Matrix precision = Matrix::Identity(k, k);
  Matrix rhs = Matrix::Zero(s.samples(), k);
  for (const auto& v : s.views) {
    const double tau = v.tau.mean()(0);
    precision += tau * v.w.second_moment();
    rhs.noalias() += tau * (v.missing.mean * v.w.mean);
  }
  const SpdFactor factor(symmetrized(precision));
  Matrix cov = factor.inverse();
  s.z.mean = rhs * cov;
  s.z.covariances = {std::move(cov)};
}

namespace {

void update_w_given(ModelState& s, std::size_t m, const Matrix& z_second) {
  auto& v = s.views[m];
  const auto& spec = s.specs[m];
  const int k = s.k_current;
  const double tau = v.tau.mean()(0);
  const Vector alpha = v.alpha.mean();
  const Matrix zz = tau * z_second;
  const Matrix xz = tau * (v.missing.mean.transpose() * s.z.mean);  // D x K

  GaussianPosterior target;
  target.mean.resize(spec.dim, k);
  if (v.gamma) {
    const Vector gamma = v.gamma->mean();
    target.covariances.reserve(static_cast<std::size_t>(spec.dim));
    for (Eigen::Index d = 0; d < spec.dim; ++d) {
      Matrix precision = zz;
      precision.diagonal() += gamma(d) * alpha;
      Matrix cov = SpdFactor(symmetrized(precision)).inverse();
      target.mean.row(d) = xz.row(d) * cov;
      target.covariances.push_back(std::move(cov));
    }
  } else {
    Matrix precision = zz;
    precision.diagonal() += alpha;
    Matrix cov = SpdFactor(symmetrized(precision)).inverse();
    target.mean = xz * cov;
    target.covariances = {std::move(cov)};
  }

  const double rho = spec.learning_rate.at(std::max(s.iteration, 1));
  if (rho >= 1.0) {
    v.w = std::move(target);
    return;
  }
  v.w.mean = (1.0 - rho) * v.w.mean + rho * target.mean;
  for (std::size_t i = 0; i < v.w.covariances.size(); ++i) {
    v.w.covariances[i] = (1.0 - rho) * v.w.covariances[i] + rho * target.covariances[i];
  }
}

void update_tau_given(ModelState& s, std::size_t m, const Matrix& z_second) {
  auto& v = s.views[m];
  const double cells = static_cast<double>(v.missing.mean.size());
  v.tau.shape(0) = s.hyper.a_tau + 0.5 * cells;
  v.tau.rate(0) = s.hyper.b_tau + 0.5 * expected_squared_error(s, v, z_second);
}

}  // namespace

void update_w(ModelState& s, std::size_t m) { update_w_given(s, m, s.z.second_moment()); }

void update_alpha(ModelState& s, std::size_t m) {
  auto& v = s.views[m];
  const Eigen::Index dim = s.specs[m].dim;
  const Vector gamma = gamma_means_or_ones(v, dim);
  const Matrix w2 = w_second_moments(v.w);
  v.alpha.shape.setConstant(s.k_current, s.hyper.a_alpha + 0.5 * static_cast<double>(dim));
  v.alpha.rate = (s.hyper.b_alpha + 0.5 * (w2.transpose() * gamma).array()).matrix();
}

void update_gamma(ModelState& s, std::size_t m) {
  auto& v = s.views[m];
  if (!v.gamma) throw std::logic_error("update_gamma: feature selection is disabled for this view");
  const Vector alpha = v.alpha.mean();
  const Matrix w2 = w_second_moments(v.w);
  v.gamma->shape.setConstant(s.specs[m].dim, s.hyper.a_gamma + 0.5 * s.k_current);
  v.gamma->rate = (s.hyper.b_gamma + 0.5 * (w2 * alpha).array()).matrix();
}

void update_tau(ModelState& s, std::size_t m) { update_tau_given(s, m, s.z.second_moment()); }

void update_missing(ModelState& s, const Dataset& data, std::size_t m) {
  auto& v = s.views[m];
  if (v.missing.missing_count == 0) return;
  const Mask& mask = data.views()[m].mask;
  const Matrix predicted = s.z.mean * v.w.mean.transpose();
  v.missing.mean = mask.select(v.missing.mean, predicted);
  v.missing.variance = 1.0 / v.tau.mean()(0);
}

double compute_elbo(const ModelState& s) {
  const auto n = static_cast<double>(s.samples());
  const auto k = static_cast<double>(s.k_current);
  const Matrix zz = s.z.second_moment();

  // Z: prior + entropy.
  double elbo = -0.5 * n * k * kLog2Pi - 0.5 * zz.trace();
  if (s.samples() > 0) {
    elbo += n * (0.5 * k * (kLog2Pi + 1.0) + 0.5 * spd_log_det(s.z.covariances.front()));
  }

  for (std::size_t m = 0; m < s.views.size(); ++m) {
    const auto& v = s.views[m];
    const auto& spec = s.specs[m];
    const auto dim = static_cast<double>(spec.dim);
    const auto tau = gamma_expectations(v.tau);
    const auto alpha = gamma_expectations(v.alpha);

    // Likelihood over every cell, plus the entropy of the missing-entry factors.
    const double cells = static_cast<double>(v.missing.mean.size());
    elbo += 0.5 * cells * (tau.mean_log(0) - kLog2Pi) - 0.5 * tau.mean(0) * expected_squared_error(s, v, zz);
    elbo += 0.5 * static_cast<double>(v.missing.missing_count) *
            (kLog2Pi + 1.0 + std::log(v.missing.variance));

    // W prior and entropy.
    const Matrix w2 = w_second_moments(v.w);
    Vector gamma_mean = Vector::Ones(spec.dim);
    Vector gamma_log = Vector::Zero(spec.dim);
    if (v.gamma) {
      const auto g = gamma_expectations(*v.gamma);
      gamma_mean = g.mean;
      gamma_log = g.mean_log;
    }
    elbo += 0.5 * k * gamma_log.sum() + 0.5 * dim * alpha.mean_log.sum() - 0.5 * dim * k * kLog2Pi -
            0.5 * gamma_mean.dot(w2 * alpha.mean);
    double w_entropy = 0.0;
    if (v.w.shared()) {
      w_entropy = dim * (0.5 * k * (kLog2Pi + 1.0) + 0.5 * spd_log_det(v.w.covariances.front()));
    } else {
      for (const auto& c : v.w.covariances) w_entropy += 0.5 * k * (kLog2Pi + 1.0) + 0.5 * spd_log_det(c);
    }
    elbo += w_entropy;

    // Gamma factors.
    elbo += gamma_log_prior(v.alpha, s.hyper.a_alpha, s.hyper.b_alpha) + gamma_entropy(v.alpha);
    elbo += gamma_log_prior(v.tau, s.hyper.a_tau, s.hyper.b_tau) + gamma_entropy(v.tau);
    if (v.gamma) elbo += gamma_log_prior(*v.gamma, s.hyper.a_gamma, s.hyper.b_gamma) + gamma_entropy(*v.gamma);
  }
  if (!std::isfinite(elbo)) throw NumericalError("ELBO is not finite");
  return elbo;
}

double compute_elbo(const ModelState& s, const Dataset& data) {
  if (data.samples() != s.samples() || data.view_count() != s.views.size()) {
    throw std::logic_error("compute_elbo: dataset does not match state");
  }
  return compute_elbo(s);
}

int prune_factors(ModelState& s) {
  const int k = s.k_current;
  Vector peak = Vector::Zero(k);
  for (const auto& v : s.views) {
    if (v.w.mean.rows() > 0) peak = peak.cwiseMax(v.w.mean.cwiseAbs().colwise().maxCoeff().transpose());
  }
  std::vector<Eigen::Index> drop;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (peak(j) < s.hyper.prune_threshold) drop.push_back(j);
  }
  if (static_cast<int>(drop.size()) == k) {
    Eigen::Index best = 0;
    peak.maxCoeff(&best);
    drop.erase(std::find(drop.begin(), drop.end(), best));
  }
  // Highest index first so earlier indices stay valid.
  for (auto it = drop.rbegin(); it != drop.rend(); ++it) {
    const Eigen::Index j = *it;
    remove_column(s.z.mean, j);
    for (auto& c : s.z.covariances) remove_row_col(c, j);
    for (auto& v : s.views) {
      remove_column(v.w.mean, j);
      for (auto& c : v.w.covariances) remove_row_col(c, j);
      remove_index(v.alpha.shape, j);
      remove_index(v.alpha.rate, j);
    }
  }
  s.k_current -= static_cast<int>(drop.size());
  return static_cast<int>(drop.size());
}

bool elbo_converged(double previous, double last, double tol) {
  return previous > last - tol * std::abs(last);
}

void sweep(ModelState& s, const Dataset& data, int iteration) {
  s.iteration = iteration;
  update_z(s);
  const Matrix zz = s.z.second_moment();
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    update_w_given(s, m, zz);
    update_alpha(s, m);
    if (s.views[m].gamma) update_gamma(s, m);
    update_tau_given(s, m, zz);
    update_missing(s, data, m);
  }
}

FitResult fit(const Dataset& data, const FitOptions& options) {
  if (data.samples() == 0) throw InputError("fit: dataset has no samples");
  if (options.track_elbo_every < 1 || options.prune_every < 1) {
    throw InputError("fit: track_elbo_every and prune_every must be >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  FitResult out{init_state(data, options.hyper, options.hyper.seed), {}};
  ModelState& s = out.state;
  auto& report = out.report;
  const int max_iter = options.hyper.max_iter;
  for (int it = 1; it <= max_iter; ++it) {
    sweep(s, data, it);
    if (it % options.prune_every == 0) prune_factors(s);
    report.iterations = it;
    if (it % options.track_elbo_every == 0) {
      s.elbo_trace.push_back(compute_elbo(s));
      const auto& lb = s.elbo_trace;
      if (lb.size() >= 2 && elbo_converged(lb[lb.size() - 2], lb.back(), options.hyper.elbo_rel_tol)) {
        report.halted_on = HaltReason::elbo_converged;
        break;
      }
    }
  }
  report.k_final = s.k_current;
  report.elbo_trace = s.elbo_trace;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ModelState infer_samples(const ModelState& fitted, const Dataset& data, int max_iter, double tol) {
  if (data.view_count() != fitted.views.size()) throw InputError("infer_samples: view count mismatch");
  for (std::size_t m = 0; m < fitted.specs.size(); ++m) {
    if (data.specs()[m].dim != fitted.specs[m].dim) throw InputError("infer_samples: view width mismatch");
  }
  ModelState s = fitted;
  s.elbo_trace.clear();
  const Eigen::Index n = data.samples();
  s.z.mean = Matrix::Zero(n, s.k_current);
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    const auto& view = data.views()[m];
    auto& miss = s.views[m].missing;
    miss.mean = view.mask.select(view.values, Matrix::Zero(n, view.cols()));
    miss.missing_count = view.mask.size() - view.mask.count();
    miss.variance = 1.0 / s.views[m].tau.mean()(0);
  }
  for (int it = 0; it < max_iter; ++it) {
    const Matrix before = s.z.mean;
    update_z(s);
    for (std::size_t m = 0; m < s.views.size(); ++m) update_missing(s, data, m);
    const double change = (s.z.mean - before).cwiseAbs().maxCoeff();
    if (n == 0 || change <= tol * (1.0 + s.z.mean.cwiseAbs().maxCoeff())) break;
  }
  return s;
}

}  // namespace latentline
