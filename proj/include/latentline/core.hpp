// Domain types shared by every latentline module: views, hyperparameters,
// variational posterior containers and dataset validation.
//
// Model, per view m:
//   z_n          ~ N(0, I_K)
//   w_dk^(m)     ~ N(0, (gamma_d^(m) alpha_k^(m))^-1)   (gamma_d = 1 without feature selection)
//   x_n^(m) | z  ~ N(z_n W^(m)T, tau^(m)^-1 I)
//   alpha, tau, gamma ~ Gamma(shape, rate)
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latentline {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Bad user input or contract violation (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerically degenerate state (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ViewKind { real, indicator };
enum class ViewRole { input, output };

/// Damping applied to a view's projection-matrix update.
struct LearningRate {
  enum class Kind { constant, inverse_iteration };
  Kind kind = Kind::constant;
  double rho = 1.0;

  static LearningRate constant_rate(double rho) { return {Kind::constant, rho}; }
  static LearningRate inverse_iteration() { return {Kind::inverse_iteration, 1.0}; }

  /// Step size at a 1-based iteration.
  double at(int iteration) const {
    return kind == Kind::constant ? rho : 1.0 / static_cast<double>(iteration);
  }
};

struct ViewSpec {
  int view_id = 1;  // 1-based
  int dim = 1;
  ViewKind kind = ViewKind::real;
  bool feature_selection = false;
  LearningRate learning_rate;
  ViewRole role = ViewRole::input;
  std::string name;
};

struct ViewData {
  Matrix values;
  Mask mask;  // true = observed

  static ViewData fully_observed(Matrix values);
  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  Eigen::Index observed_count() const { return mask.count(); }
};

struct Hyperparameters {
  double a_alpha = 1e-14, b_alpha = 1e-14;
  double a_tau = 1e-14, b_tau = 1e-14;
  double a_gamma = 1e-14, b_gamma = 1e-14;
  int k_init = 50;
  double prune_threshold = 1e-6;
  double elbo_rel_tol = 1e-6;
  int max_iter = 50000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian factor over the rows of `mean`. `covariances` holds either one
/// matrix shared by every row or one matrix per row.
struct GaussianPosterior {
  Matrix mean;
  std::vector<Matrix> covariances;

  bool shared() const { return covariances.size() == 1; }
  const Matrix& covariance(Eigen::Index row) const {
    return shared() ? covariances.front() : covariances[static_cast<std::size_t>(row)];
  }
  /// Sum over rows of E[r r^T] = mean^T mean + sum_r Cov_r.
  Matrix second_moment() const;
};

struct GammaPosterior {
  Vector shape;
  Vector rate;

  static GammaPosterior prior(Eigen::Index size, double shape, double rate);
  Vector mean() const { return shape.cwiseQuotient(rate); }
};

struct GammaMoments {
  Vector mean;      // E[x]
  Vector mean_log;  // E[log x]
};

GammaMoments gamma_expectations(const GammaPosterior& g);

/// Independent Gaussian factors for the unobserved entries of one view. The
/// mean matrix carries the observed value at observed cells so it doubles as
/// the completed data matrix used by the updates.
struct MissingPosterior {
  Matrix mean;
  double variance = 1.0;
  Eigen::Index missing_count = 0;
};

struct ViewPosterior {
  GaussianPosterior w;       // D_m x K
  GammaPosterior alpha;      // K
  GammaPosterior tau;        // 1
  std::optional<GammaPosterior> gamma;  // D_m when feature selection is on
  MissingPosterior missing;  // N x D_m
};

/// Per-feature affine scaling; standardized = (x - mean) / scale.
struct Standardizer {
  std::vector<Vector> mean;   // one per view
  std::vector<Vector> scale;  // one per view, all > 0

  double to_original(std::size_t view, Eigen::Index col, double value) const {
    return value * scale[view](col) + mean[view](col);
  }
  double variance_to_original(std::size_t view, Eigen::Index col, double variance) const {
    return variance * scale[view](col) * scale[view](col);
  }
};

struct ModelState {
  Hyperparameters hyper;
  std::vector<ViewSpec> specs;
  GaussianPosterior z;  // N x K, shared covariance
  std::vector<ViewPosterior> views;
  int k_current = 0;
  int iteration = 0;
  std::vector<double> elbo_trace;
  std::optional<Standardizer> scaling;

  Eigen::Index samples() const { return z.mean.rows(); }

  /// Throws std::logic_error if any type invariant is broken.
  void check_invariants() const;
};

/// Views and specs that passed validation.
class Dataset {
 public:
  const std::vector<ViewSpec>& specs() const { return specs_; }
  const std::vector<ViewData>& views() const { return views_; }
  Eigen::Index samples() const { return samples_; }
  std::size_t view_count() const { return views_.size(); }

 private:
  friend Dataset validate_dataset(std::vector<ViewSpec>, std::vector<ViewData>);
  std::vector<ViewSpec> specs_;
  std::vector<ViewData> views_;
  Eigen::Index samples_ = 0;
};

/// Checks shapes, finiteness of observed cells, spec invariants and that
/// every view has at least one observation.
Dataset validate_dataset(std::vector<ViewSpec> specs, std::vector<ViewData> data);

}  // namespace latentline
