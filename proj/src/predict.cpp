#include "latentline/predict.hpp"

#include <algorithm>

namespace latentline {

namespace {

void check_view(const ModelState& s, std::size_t view) {
  if (view >= s.views.size()) throw InputError("unknown view " + std::to_string(view + 1));
}

}  // namespace

Prediction predict_view(const ModelState& s, std::span<const Eigen::Index> samples, std::size_t view) {
  check_view(s, view);
  const auto& v = s.views[view];
  const Eigen::Index dim = v.w.mean.rows();
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const Matrix& z_cov = s.z.covariance(0);
  const double noise = 1.0 / v.tau.mean()(0);

  // Per-row constants: m_d^T Sigma_Z m_d + tr(Sigma_Z S_d).
  Vector row_const(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const auto& cov = v.w.covariance(d);
    row_const(d) = v.w.mean.row(d) * z_cov * v.w.mean.row(d).transpose() + (z_cov.array() * cov.array()).sum();
  }

  Prediction p{Matrix(rows, dim), Matrix(rows, dim)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index n = samples[static_cast<std::size_t>(r)];
    if (n < 0 || n >= s.samples()) throw InputError("sample index " + std::to_string(n) + " out of range");
    const auto mu = s.z.mean.row(n);
    for (Eigen::Index d = 0; d < dim; ++d) {
      p.mean(r, d) = mu.dot(v.w.mean.row(d));
      p.variance(r, d) = row_const(d) + mu * v.w.covariance(d) * mu.transpose() + noise;
    }
  }
  if (s.scaling && s.specs[view].kind == ViewKind::real) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        p.mean(r, d) = s.scaling->to_original(view, d, p.mean(r, d));
        p.variance(r, d) = s.scaling->variance_to_original(view, d, p.variance(r, d));
      }
    }
  }
  return p;
}

Classification scores_from_means(const Matrix& means) {
  Classification c;
  c.scores = means.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index i = 0; i < c.scores.rows(); ++i) {
    const double total = c.scores.row(i).sum();
    if (total > 0.0) {
      c.scores.row(i) /= total;
    } else {
      c.scores.row(i).setConstant(1.0 / static_cast<double>(c.scores.cols()));
    }
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < c.scores.cols(); ++j) {
      if (means(i, j) > means(i, best)) best = j;
    }
    c.labels.push_back(static_cast<int>(best));
  }
  return c;
}

Classification classify_onehot(const ModelState& s, std::span<const Eigen::Index> samples, std::size_t view) {
  check_view(s, view);
  if (s.specs[view].kind != ViewKind::indicator) {
    throw InputError("view " + std::to_string(view + 1) + " is not an indicator view");
  }
  return scores_from_means(predict_view(s, samples, view).mean);
}

RelevanceProfile feature_relevance(const ModelState& s, std::size_t view, Normalization normalization) {
  check_view(s, view);
  const auto& g = s.views[view].gamma;
  if (!g) throw InputError("feature selection is not enabled for view " + std::to_string(view + 1));
  RelevanceProfile p;
  p.normalization = normalization;
  p.scores = g->mean().cwiseInverse();
  if (normalization == Normalization::unit_sum) p.scores /= p.scores.sum();
  return p;
}

Vector loading_row_norms(const ModelState& s, std::size_t view) {
  check_view(s, view);
  return s.views[view].w.mean.rowwise().norm();
}

FactorActivity factor_activity(const ModelState& s, std::optional<double> threshold) {
  FactorActivity a;
  a.threshold = threshold.value_or(s.hyper.prune_threshold);
  a.matrix = Mask::Constant(static_cast<Eigen::Index>(s.views.size()), s.k_current, false);
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    const Matrix& w = s.views[m].w.mean;
    for (Eigen::Index k = 0; k < s.k_current; ++k) {
      a.matrix(static_cast<Eigen::Index>(m), k) = w.rows() > 0 && w.col(k).cwiseAbs().maxCoeff() >= a.threshold;
    }
  }
  return a;
}

std::map<CellKey, CellEstimate> estimate_cells(const ModelState& s, const WindowedData& w,
                                               const SubjectTable& table, const Catalog& catalog) {
  if (w.samples_count() != s.samples() || w.views.size() != s.views.size()) {
    throw InputError("windowed data does not match the fitted model");
  }
  struct Accum {
    double mean = 0.0, variance = 0.0;
    Vector class_mean;
    int count = 0;
  };
  std::map<CellKey, Accum> acc;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(s.samples()));
  for (Eigen::Index i = 0; i < s.samples(); ++i) all[static_cast<std::size_t>(i)] = i;
  const auto classes = static_cast<Eigen::Index>(diagnosis_labels().size());

  for (std::size_t m = 0; m < w.views.size(); ++m) {
    const auto& view = w.views[m];
    const Prediction p = predict_view(s, all, m);
    for (Eigen::Index i = 0; i < s.samples(); ++i) {
      const auto& month = w.cell_month[m][static_cast<std::size_t>(i)];
      if (!month) continue;
      const auto& subject = w.samples[static_cast<std::size_t>(i)].subject;
      for (Eigen::Index c = 0; c < p.mean.cols(); ++c) {
        auto& a = acc[CellKey{subject, *month, view.variables[static_cast<std::size_t>(c)]}];
        const int cls = view.class_index[static_cast<std::size_t>(c)];
        if (cls >= 0) {
          if (a.class_mean.size() == 0) a.class_mean = Vector::Zero(classes);
          a.class_mean(cls) += p.mean(i, c);
          a.variance += p.variance(i, c);
          if (cls == 0) ++a.count;
        } else {
          a.mean += p.mean(i, c);
          a.variance += p.variance(i, c);
          ++a.count;
        }
      }
    }
  }

  std::map<CellKey, CellEstimate> out;
  for (auto& [key, a] : acc) {
    const auto& [subject, month, variable] = key;
    CellEstimate e;
    const bool is_dx = catalog.group_of(variable) == VariableGroup::D;
    const auto observed = table.value(subject, month, variable);
    if (observed) {
      e.source = CellSource::observed;
      e.value = *observed;
      if (is_dx) {
        e.class_scores = Vector::Zero(classes);
        (*e.class_scores)(static_cast<Eigen::Index>(*observed)) = 1.0;
      }
    } else if (is_dx) {
      const auto c = scores_from_means(a.class_mean.transpose() / static_cast<double>(a.count));
      e.value = c.labels.front();
      e.class_scores = c.scores.row(0).transpose();
      e.variance = a.variance / static_cast<double>(a.count * classes);
    } else {
      e.value = a.mean / static_cast<double>(a.count);
      e.variance = a.variance / static_cast<double>(a.count);
    }
    out.emplace(key, std::move(e));
  }
  return out;
}

std::vector<TrajectoryPoint> subject_trajectory(const ModelState& s, const WindowedData& w,
                                                const SubjectTable& table, const Catalog& catalog,
                                                const std::string& subject, const std::string& variable) {
  const auto subjects = table.subjects();
  if (!std::binary_search(subjects.begin(), subjects.end(), subject)) {
    throw InputError("unknown subject '" + subject + "'");
  }
  if (!catalog.contains(variable)) throw InputError("unknown variable '" + variable + "'");
  std::vector<TrajectoryPoint> out;
  for (auto& [key, e] : estimate_cells(s, w, table, catalog)) {
    if (std::get<0>(key) == subject && std::get<2>(key) == variable) out.push_back({std::get<1>(key), e});
  }
  if (out.empty()) throw InputError("variable '" + variable + "' is not part of the window layout");
  return out;
}

}  // namespace latentline
