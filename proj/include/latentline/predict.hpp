// Read-only queries over a fitted ModelState: predictive distributions,
// diagnosis scores, feature relevances, factor activity and per-subject
// trajectories.
#pragma once

#include "latentline/core.hpp"
#include "latentline/longitudinal.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latentline {

struct Prediction {
  Matrix mean;      // rows follow the requested samples
  Matrix variance;  // includes W, Z and observation noise
};

/// Predictive mean <z_n><W>^T and variance per entry, in original units
/// when the state carries a Standardizer.
Prediction predict_view(const ModelState& state, std::span<const Eigen::Index> samples, std::size_t view);

struct Classification {
  std::vector<int> labels;  // argmax of the raw means, ties to the lowest class
  Matrix scores;            // rows sum to 1
};

/// Clips predictive means to [0, 1] and renormalizes each row (uniform when
/// a row clips to all zeros).
Classification scores_from_means(const Matrix& means);
Classification classify_onehot(const ModelState& state, std::span<const Eigen::Index> samples, std::size_t view);

enum class Normalization { raw, unit_sum };

struct RelevanceProfile {
  Vector scores;
  Normalization normalization = Normalization::raw;
};

/// score_d = 1 / <gamma_d>. Throws InputError without feature selection.
RelevanceProfile feature_relevance(const ModelState& state, std::size_t view,
                                   Normalization normalization = Normalization::raw);
/// Row norms of <W>, available for every view.
Vector loading_row_norms(const ModelState& state, std::size_t view);

struct FactorActivity {
  Mask matrix;  // views x k_current
  double threshold = 0.0;
};

/// active(m, k) iff max_d |<w_dk^(m)>| >= threshold (prune threshold by default).
FactorActivity factor_activity(const ModelState& state, std::optional<double> threshold = std::nullopt);

enum class CellSource { observed, imputed };

struct CellEstimate {
  CellSource source = CellSource::imputed;
  double value = 0.0;     // class index for the diagnosis
  double variance = 0.0;  // 0 for observed cells
  std::optional<Vector> class_scores;
};

using CellKey = SubjectTable::Key;  // (subject, month, variable)

/// Every (subject, month, variable) that feeds at least one window cell.
/// Cells with a value in `table` are reported as observed with that value;
/// the rest average the predictive means (and variances) of all window
/// cells they feed.
std::map<CellKey, CellEstimate> estimate_cells(const ModelState& state, const WindowedData& windows,
                                               const SubjectTable& table, const Catalog& catalog);

struct TrajectoryPoint {
  int month = 0;
  CellEstimate estimate;
};

/// Throws InputError for an unknown subject or variable.
std::vector<TrajectoryPoint> subject_trajectory(const ModelState& state, const WindowedData& windows,
                                                const SubjectTable& table, const Catalog& catalog,
                                                const std::string& subject, const std::string& variable);

}  // namespace latentline
