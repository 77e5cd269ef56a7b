// Ground-truth synthetic data: forward samples of the multi-view factor model
// and a longitudinal cohort generator that mimics visit-based missingness.
#pragma once

#include "latentline/core.hpp"
#include "latentline/longitudinal.hpp"

#include <cstdint>
#include <vector>

namespace latentline {

struct MissingMechanism {
  enum class Kind { none, mcar, monotone_dropout };
  Kind kind = Kind::none;
  double rate = 0.0;  // in [0, 1)
};

struct SynthConfig {
  int n_subjects = 200;
  int k_true = 4;
  std::vector<int> view_dims = {10, 12, 8};
  /// Per view, the factors with nonzero loadings; empty = all factors.
  std::vector<std::vector<int>> active_factors;
  /// Per view, the rows with nonzero loadings; empty = all rows.
  std::vector<std::vector<int>> relevant_features;
  /// Per view; +infinity gives noiseless data. Empty = derived from `snr`.
  std::vector<double> noise_precision;
  double snr = 10.0;
  MissingMechanism missing;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthTruth {
  Matrix z;                       // N x K
  std::vector<Matrix> w;          // D_m x K
  std::vector<Matrix> noiseless;  // Z W^T
  std::vector<Matrix> complete;   // with noise, before masking
  std::vector<double> noise_precision;
};

struct SynthDataset {
  std::vector<ViewSpec> specs;
  std::vector<ViewData> views;
  SynthTruth truth;

  Dataset validated() const { return validate_dataset(specs, views); }
};

/// Z ~ N(0, I), W ~ N(0, 1) outside the zeroed rows/columns, X = Z W^T +
/// noise, then the missing mechanism. Monotone dropout treats the view order
/// as time: each sample leaves at a random view and everything after is
/// missing. The first view is never dropped.
SynthDataset generate(const SynthConfig& config);

/// Mean cosine of the principal angles between the column spaces of two
/// matrices with equal row counts. Throws InputError on a zero matrix.
double subspace_alignment(const Matrix& learned, const Matrix& truth);

/// Vertical stack of per-view loading matrices.
Matrix stack_loadings(const std::vector<Matrix>& per_view);

struct CohortConfig {
  int n_subjects = 300;
  int latent_dim = 3;
  int ti_vars = 4;
  int td_vars = 8;
  int visit_step = 6;
  int last_month = 36;
  double noise_sd = 0.3;
  double visit_miss_rate = 0.15;     // whole visit skipped (never at month 0)
  double td_group_miss_rate = 0.4;   // per (visit, TD variable) MCAR
  double dropout_hazard = 0.12;      // per (subject, TD variable) per visit, monotone
  double target_miss_rate = 0.1;     // MCAR on V/A/D at any visit
  std::uint64_t seed = 0;
};

struct Cohort {
  Catalog catalog;
  SubjectTable table;
  /// Every generated value before masking, keyed like the table.
  SubjectTable complete;
};

/// Subjects follow linear latent trajectories u(t) = a + b t / 36. TI
/// variables are linear in (a, b), TD/V/A are linear in u(t), D thresholds a
/// disease score into NC/MCI/AD. Missingness: skipped visits, per-variable
/// MCAR, monotone per-variable dropout of TD variables.
Cohort generate_cohort(const CohortConfig& config);

}  // namespace latentline
