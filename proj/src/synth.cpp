#include "latentline/synth.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <random>

namespace latentline {

void SynthConfig::validate() const {
  if (n_subjects < 1) throw InputError("synth: n_subjects must be >= 1");
  if (k_true < 1) throw InputError("synth: k_true must be >= 1");
  if (view_dims.empty()) throw InputError("synth: no views");
  for (int d : view_dims) {
    if (d < 1) throw InputError("synth: view dims must be >= 1");
  }
  const auto m = view_dims.size();
  if (!active_factors.empty() && active_factors.size() != m) throw InputError("synth: active_factors size");
  if (!relevant_features.empty() && relevant_features.size() != m) throw InputError("synth: relevant_features size");
  if (!noise_precision.empty() && noise_precision.size() != m) throw InputError("synth: noise_precision size");
  for (double p : noise_precision) {
    if (!(p > 0.0)) throw InputError("synth: noise precision must be positive");
  }
  if (!(missing.rate >= 0.0 && missing.rate < 1.0)) throw InputError("synth: missing rate must lie in [0, 1)");
  if (noise_precision.empty() && !(snr > 0.0)) throw InputError("synth: snr must be positive");
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::Index n = config.n_subjects;
  const Eigen::Index k = config.k_true;
  const std::size_t views = config.view_dims.size();

  SynthDataset out;
  auto& truth = out.truth;
  truth.z = Matrix::NullaryExpr(n, k, [&]() { return normal(rng); });
  for (std::size_t m = 0; m < views; ++m) {
    const Eigen::Index dim = config.view_dims[m];
    Matrix w = Matrix::NullaryExpr(dim, k, [&]() { return normal(rng); });
    if (!config.active_factors.empty()) {
      Matrix keep = Matrix::Zero(dim, k);
      for (int f : config.active_factors[m]) keep.col(f).setOnes();
      w = w.cwiseProduct(keep);
    }
    if (!config.relevant_features.empty()) {
      Matrix keep = Matrix::Zero(dim, k);
      for (int d : config.relevant_features[m]) keep.row(d).setOnes();
      w = w.cwiseProduct(keep);
    }
    truth.w.push_back(w);
    truth.noiseless.push_back(truth.z * w.transpose());
  }
  for (std::size_t m = 0; m < views; ++m) {
    double precision = 0.0;
    if (config.noise_precision.empty()) {
      const double signal = truth.noiseless[m].squaredNorm() / static_cast<double>(truth.noiseless[m].size());
      precision = config.snr / std::max(signal, 1e-12);
    } else {
      precision = config.noise_precision[m];
    }
    truth.noise_precision.push_back(precision);
    const double sd = std::isinf(precision) ? 0.0 : 1.0 / std::sqrt(precision);
    const Matrix& clean = truth.noiseless[m];
    Matrix noisy = clean;
    if (sd > 0.0) noisy += Matrix::NullaryExpr(clean.rows(), clean.cols(), [&]() { return sd * normal(rng); });
    truth.complete.push_back(noisy);
  }

  std::vector<Mask> masks;
  for (std::size_t m = 0; m < views; ++m) masks.push_back(Mask::Constant(n, config.view_dims[m], true));
  switch (config.missing.kind) {
    case MissingMechanism::Kind::none: break;
    case MissingMechanism::Kind::mcar:
      for (auto& mask : masks) {
        for (Eigen::Index i = 0; i < mask.rows(); ++i) {
          for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) = unif(rng) >= config.missing.rate;
        }
      }
      break;
    case MissingMechanism::Kind::monotone_dropout:
      for (Eigen::Index i = 0; i < n; ++i) {
        bool dropped = false;
        for (std::size_t m = 1; m < views; ++m) {
          dropped = dropped || unif(rng) < config.missing.rate;
          if (dropped) masks[m].row(i).setConstant(false);
        }
      }
      break;
  }

  for (std::size_t m = 0; m < views; ++m) {
    ViewSpec spec;
    spec.view_id = static_cast<int>(m) + 1;
    spec.dim = config.view_dims[m];
    spec.name = "view" + std::to_string(m + 1);
    out.specs.push_back(spec);
    out.views.push_back({masks[m].select(truth.complete[m], Matrix::Zero(n, spec.dim)), masks[m]});
  }
  return out;
}

Matrix stack_loadings(const std::vector<Matrix>& per_view) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = per_view.empty() ? 0 : per_view.front().cols();
  for (const auto& w : per_view) rows += w.rows();
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& w : per_view) {
    out.middleRows(at, w.rows()) = w;
    at += w.rows();
  }
  return out;
}

namespace {

Matrix orthonormal_basis(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double cut = s.size() ? s(0) * 1e-10 * static_cast<double>(std::max(a.rows(), a.cols())) : 0.0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

double subspace_alignment(const Matrix& learned, const Matrix& truth) {
  if (learned.rows() != truth.rows()) throw InputError("subspace_alignment: row counts differ");
  if (learned.size() == 0 || truth.size() == 0 || learned.cwiseAbs().maxCoeff() == 0.0 ||
      truth.cwiseAbs().maxCoeff() == 0.0) {
    throw InputError("subspace_alignment: zero matrix");
  }
  const Matrix qa = orthonormal_basis(learned);
  const Matrix qb = orthonormal_basis(truth);
  const Vector cosines = Eigen::JacobiSVD<Matrix>(qa.transpose() * qb).singularValues();
  return std::clamp(cosines.mean(), 0.0, 1.0);
}

Cohort generate_cohort(const CohortConfig& c) {
  if (c.n_subjects < 1 || c.latent_dim < 1 || c.ti_vars < 0 || c.td_vars < 1 || c.visit_step < 1 ||
      c.last_month < c.visit_step) {
    throw InputError("cohort: invalid sizes");
  }
  for (double r : {c.visit_miss_rate, c.td_group_miss_rate, c.dropout_hazard, c.target_miss_rate}) {
    if (!(r >= 0.0 && r < 1.0)) throw InputError("cohort: rates must lie in [0, 1)");
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int q = c.latent_dim;
  auto randn = [&](Eigen::Index r, Eigen::Index cols, double sd) {
    return Matrix(Matrix::NullaryExpr(r, cols, [&]() { return sd * normal(rng); }));
  };

  // Names follow the default catalog so its files can be fitted without a
  // custom catalog; overflow columns get generic names.
  const Catalog reference = Catalog::default_catalog();
  auto names = [&](VariableGroup g, int count, const std::string& stem) {
    auto known = reference.in_group(g);
    std::vector<std::string> out;
    for (int j = 0; j < count; ++j) {
      out.push_back(j < static_cast<int>(known.size()) ? known[static_cast<std::size_t>(j)] : stem + std::to_string(j + 1));
    }
    return out;
  };
  const auto ti_names = names(VariableGroup::TI, c.ti_vars, "ti");
  const auto td_names = names(VariableGroup::TD, c.td_vars, "td");
  const std::string v_name = reference.in_group(VariableGroup::V).front();
  const std::string a_name = reference.in_group(VariableGroup::A).front();
  const std::string d_name = reference.in_group(VariableGroup::D).front();
  std::vector<Catalog::Entry> entries;
  for (const auto& n : ti_names) entries.push_back({n, VariableGroup::TI});
  for (const auto& n : td_names) entries.push_back({n, VariableGroup::TD});
  entries.push_back({v_name, VariableGroup::V});
  entries.push_back({a_name, VariableGroup::A});
  entries.push_back({d_name, VariableGroup::D});
  Cohort out{Catalog(entries), {}, {}};

  // Shared disease axis: latent coordinate 0 drifts upward over time and
  // drives V, A and D together.
  const Matrix ti_load = randn(c.ti_vars, 2 * q, 1.0 / std::sqrt(2.0 * q));
  Matrix td_load = randn(c.td_vars, q, 1.0 / std::sqrt(static_cast<double>(q)));
  Vector v_load = randn(q, 1, 0.4);
  Vector a_load = randn(q, 1, 0.4);
  Vector d_load = randn(q, 1, 0.3);
  v_load(0) = 1.0;
  a_load(0) = 1.0;
  d_load(0) = 1.0;
  const Matrix progression = randn(q, q, 0.3);
  Vector drift = Vector::Zero(q);
  drift(0) = 0.8;

  auto affine = [&](Eigen::Index count, double lo, double hi) {
    Vector v(count);
    for (Eigen::Index i = 0; i < count; ++i) v(i) = lo + (hi - lo) * unif(rng);
    return v;
  };
  const Vector ti_offset = affine(c.ti_vars, -5.0, 20.0), ti_scale = affine(c.ti_vars, 0.5, 5.0);
  const Vector td_offset = affine(c.td_vars, -5.0, 20.0), td_scale = affine(c.td_vars, 0.5, 5.0);
  const double v_offset = 40.0, v_scale = 8.0, a_offset = 18.0, a_scale = 6.0;

  const int width = static_cast<int>(std::to_string(c.n_subjects).size());
  for (int s = 0; s < c.n_subjects; ++s) {
    std::string id = std::to_string(s + 1);
    id = "S" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    const Vector a = randn(q, 1, 1.0);
    const Vector b = drift + progression * a + randn(q, 1, 0.4);

    Vector ab(2 * q);
    ab << a, b;
    for (int j = 0; j < c.ti_vars; ++j) {
      const double clean = ti_load.row(j).dot(ab) + c.noise_sd * normal(rng);
      const double x = ti_offset(j) + ti_scale(j) * clean;
      const std::string& var = ti_names[static_cast<std::size_t>(j)];
      out.complete.add({id, 0, var, x, 0});
      out.table.add({id, 0, var, unif(rng) < 0.05 ? std::nullopt : std::optional<double>(x), 0});
    }

    std::vector<int> dropout_month(static_cast<std::size_t>(c.td_vars), std::numeric_limits<int>::max());
    for (int j = 0; j < c.td_vars; ++j) {
      for (int t = c.visit_step; t <= c.last_month; t += c.visit_step) {
        if (unif(rng) < c.dropout_hazard) {
          dropout_month[static_cast<std::size_t>(j)] = t;
          break;
        }
      }
    }

    for (int t = 0; t <= c.last_month; t += c.visit_step) {
      const Vector u = a + b * (static_cast<double>(t) / 36.0);
      const bool skipped = t > 0 && unif(rng) < c.visit_miss_rate;
      for (int j = 0; j < c.td_vars; ++j) {
        const double x = td_offset(j) + td_scale(j) * (td_load.row(j).dot(u) + c.noise_sd * normal(rng));
        const std::string& var = td_names[static_cast<std::size_t>(j)];
        const bool gone = skipped || t >= dropout_month[static_cast<std::size_t>(j)] ||
                          unif(rng) < c.td_group_miss_rate;
        out.complete.add({id, t, var, x, 0});
        out.table.add({id, t, var, gone ? std::nullopt : std::optional<double>(x), 0});
      }
      const double v = v_offset + v_scale * (v_load.dot(u) + c.noise_sd * normal(rng));
      const double adas = a_offset + a_scale * (a_load.dot(u) + c.noise_sd * normal(rng));
      const double score = d_load.dot(u) + c.noise_sd * normal(rng);
      const double dx = score < -0.3 ? 0.0 : (score < 1.0 ? 1.0 : 2.0);
      const std::pair<const std::string&, double> targets[] = {{v_name, v}, {a_name, adas}, {d_name, dx}};
      for (const auto& [var, x] : targets) {
        const bool gone = skipped || unif(rng) < c.target_miss_rate;
        out.complete.add({id, t, var, x, 0});
        out.table.add({id, t, var, gone ? std::nullopt : std::optional<double>(x), 0});
      }
    }
  }
  return out;
}

}  // namespace latentline
