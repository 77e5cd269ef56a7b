// Benchmark harness: SSHIBA against imputer + ridge/logistic baselines on
// windowed longitudinal data, per task and input-variable subset.
#pragma once

#include "latentline/baselines.hpp"
#include "latentline/longitudinal.hpp"
#include "latentline/synth.hpp"
#include "latentline/vi.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace latentline {

/// Standardizes on the train rows, fits every sample (test outputs masked)
/// and attaches the scaling to the returned state.
FitResult fit_windows(const WindowedData& windows, FitOptions options);

/// min(samples, total columns, 50).
int default_k_init(const WindowedData& windows);

/// Input restriction: the task's own variable, the MD block (TI and TD
/// groups), both, or every catalog input.
enum class SubsetKind { target, md, md_target, all };

struct BenchmarkSpec {
  std::string name;
  bool multitask = false;  // one SSHIBA fit predicts every task
  std::vector<VariableGroup> tasks;
  std::vector<SubsetKind> subsets;
  std::vector<ImputationStrategy> imputers{std::begin(kAllImputers), std::end(kAllImputers)};
  bool include_sshiba = true;
  std::vector<std::uint64_t> seeds = {0};
  int folds = 10;
  WindowLayout layout;
  FitOptions fit;  // hyper.k_init <= 0 means default_k_init
  bool class_weighted_mauc = true;

  /// "appendixA" or "multitask".
  static BenchmarkSpec preset(const std::string& name);
  void validate() const;
};

std::string subset_name(SubsetKind kind, VariableGroup task);

struct ResultRow {
  std::string method;  // sshiba, ridge+<imputer>, logistic+<imputer>
  std::string input_subset;
  std::string task;    // D, V or A
  std::string metric;  // mae or mauc
  double value = 0.0;  // NaN when the cell failed
  std::uint64_t seed = 0;
  std::string error;
};

/// Runs every cell of the spec on one dataset. `seed` drives model
/// initialization and CV folds. Cell failures are recorded in the rows.
std::vector<ResultRow> run_benchmark(const BenchmarkSpec& spec, const SubjectTable& table, const Catalog& catalog,
                                     std::uint64_t seed);

/// One synthetic cohort per spec seed (cohort seed = spec seed).
std::vector<ResultRow> run_synthetic_benchmark(const BenchmarkSpec& spec, CohortConfig cohort);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Per task: methods as rows, input subsets as columns, mean over seeds.
void write_results_report(std::ostream& out, const std::vector<ResultRow>& rows);

/// LATENTLINE_THREADS, with 0 or unset meaning hardware concurrency.
unsigned worker_count();

}  // namespace latentline
