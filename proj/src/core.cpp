#include "latentline/core.hpp"

#include "latentline/linalg.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <set>

namespace latentline {

ViewData ViewData::fully_observed(Matrix values) {
  ViewData v;
  v.mask = Mask::Constant(values.rows(), values.cols(), true);
  v.values = std::move(values);
  return v;
}

void Hyperparameters::validate() const {
  for (double v : {a_alpha, b_alpha, a_tau, b_tau, a_gamma, b_gamma}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("Gamma prior shape/rate must be positive");
  }
  if (k_init < 1) throw InputError("k_init must be >= 1");
  if (!(prune_threshold > 0.0)) throw InputError("prune_threshold must be positive");
  if (!(elbo_rel_tol >= 0.0)) throw InputError("elbo_rel_tol must be non-negative");
  if (max_iter < 1) throw InputError("max_iter must be >= 1");
}

Matrix GaussianPosterior::second_moment() const {
  Matrix m = Matrix::Zero(mean.cols(), mean.cols());
  m.selfadjointView<Eigen::Lower>().rankUpdate(mean.transpose());
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  if (shared()) {
    m += static_cast<double>(mean.rows()) * covariances.front();
  } else {
    for (const auto& c : covariances) m += c;
  }
  return m;
}

GammaPosterior GammaPosterior::prior(Eigen::Index size, double shape, double rate) {
  return {Vector::Constant(size, shape), Vector::Constant(size, rate)};
}

GammaMoments gamma_expectations(const GammaPosterior& g) {
  GammaMoments out;
  out.mean = g.shape.cwiseQuotient(g.rate);
  out.mean_log.resize(g.shape.size());
  for (Eigen::Index i = 0; i < g.shape.size(); ++i) {
    out.mean_log(i) = boost::math::digamma(g.shape(i)) - std::log(g.rate(i));
  }
  return out;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("ModelState invariant violated: " + what);
}

void check_gamma(const GammaPosterior& g, Eigen::Index size, const std::string& name) {
  require(g.shape.size() == size && g.rate.size() == size, name + " size");
  require((g.shape.array() > 0.0).all() && (g.rate.array() > 0.0).all(), name + " positivity");
  require(g.shape.allFinite() && g.rate.allFinite(), name + " finiteness");
}

void check_gaussian(const GaussianPosterior& g, Eigen::Index rows, Eigen::Index cols,
                    const std::string& name) {
  require(g.mean.rows() == rows && g.mean.cols() == cols, name + " mean shape");
  require(g.mean.allFinite(), name + " mean finiteness");
  require(g.shared() || static_cast<Eigen::Index>(g.covariances.size()) == rows,
          name + " covariance count");
  for (const auto& c : g.covariances) {
    require(c.rows() == cols && c.cols() == cols, name + " covariance shape");
    require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + c.cwiseAbs().maxCoeff()),
            name + " covariance symmetry");
    if (cols > 0) {
      Eigen::LLT<Matrix> llt(c);
      require(llt.info() == Eigen::Success, name + " covariance positive definiteness");
    }
  }
}

}  // namespace

void ModelState::check_invariants() const {
  hyper.validate();
  require(k_current >= 1 && k_current <= hyper.k_init, "1 <= k_current <= k_init");
  require(specs.size() == views.size(), "one posterior per view");
  check_gaussian(z, z.mean.rows(), k_current, "q(Z)");
  require(z.shared(), "q(Z) covariance shared over samples");
  for (std::size_t m = 0; m < views.size(); ++m) {
    const auto& v = views[m];
    const auto& s = specs[m];
    const std::string tag = "view " + std::to_string(s.view_id) + " ";
    check_gaussian(v.w, s.dim, k_current, tag + "q(W)");
    check_gamma(v.alpha, k_current, tag + "q(alpha)");
    check_gamma(v.tau, 1, tag + "q(tau)");
    require(v.gamma.has_value() == s.feature_selection, tag + "q(gamma) presence");
    if (v.gamma) check_gamma(*v.gamma, s.dim, tag + "q(gamma)");
    require(v.missing.mean.rows() == z.mean.rows() && v.missing.mean.cols() == s.dim,
            tag + "q(missing) shape");
    require(v.missing.variance > 0.0, tag + "q(missing) variance");
  }
  for (double e : elbo_trace) require(std::isfinite(e), "finite ELBO trace");
}

Dataset validate_dataset(std::vector<ViewSpec> specs, std::vector<ViewData> data) {
  if (specs.size() != data.size()) throw InputError("number of view specs and view data differ");
  if (specs.empty()) throw InputError("dataset has no views");
  const Eigen::Index n = data.front().rows();
  std::set<int> ids;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    const auto& s = specs[m];
    const auto& v = data[m];
    const std::string tag = "view " + std::to_string(s.view_id);
    if (s.dim < 1) throw InputError(tag + ": dim must be >= 1");
    if (s.learning_rate.kind == LearningRate::Kind::constant &&
        !(s.learning_rate.rho > 0.0 && s.learning_rate.rho <= 1.0)) {
      throw InputError(tag + ": constant learning rate must lie in (0, 1]");
    }
    ids.insert(s.view_id);
    if (v.rows() != n) throw InputError(tag + ": sample count differs from view 1");
    if (v.cols() != s.dim) throw InputError(tag + ": data width does not match dim");
    if (v.mask.rows() != v.rows() || v.mask.cols() != v.cols()) {
      throw InputError(tag + ": mask shape does not match values");
    }
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (v.mask(i, j) && !std::isfinite(v.values(i, j))) {
          throw InputError(tag + ": non-finite observed value at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
        }
      }
    }
    if (v.observed_count() == 0) throw InputError(tag + ": view has no observations");
  }
  if (ids.size() != specs.size() || *ids.begin() != 1 ||
      *ids.rbegin() != static_cast<int>(specs.size())) {
    throw InputError("view ids must be unique and contiguous from 1");
  }
  Dataset ds;
  ds.specs_ = std::move(specs);
  ds.views_ = std::move(data);
  ds.samples_ = n;
  return ds;
}

}  // namespace latentline
