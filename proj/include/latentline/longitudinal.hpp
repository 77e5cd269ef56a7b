// Long-format longitudinal records and their assembly into the rolling-window
// multi-view layout used for forecasting.
//
// For a target month t every sample carries:
//   TI                       time-independent variables (baseline values)
//   TD[t+lag] for each lag   time-dependent variables, lagged V and A included
//   D[t+lag]  for each lag   one-vs-all diagnosis indicators
//   D[t], V[t], A[t]         outputs
// Train samples slide t over `train_targets`; months before 0 are missing.
// The test sample targets `test_target` and drops every input closer than
// `min_lead` months to it. Train outputs closer than `min_lead` to the test
// target are masked too.
#pragma once

#include "latentline/core.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace latentline {

enum class VariableGroup { TI, TD, V, A, D };

const char* to_string(VariableGroup g);
VariableGroup parse_group(const std::string& text);

inline const std::vector<std::string>& diagnosis_labels() {
  static const std::vector<std::string> labels = {"NC", "MCI", "AD"};
  return labels;
}

class Catalog {
 public:
  struct Entry {
    std::string name;
    VariableGroup group;
  };

  Catalog() = default;
  explicit Catalog(std::vector<Entry> entries);

  /// The 36 default variables: 9 TI, 21 TD, V, A and D.
  static Catalog default_catalog();
  /// Lines `variable,group`; blank lines and lines starting with '#' ignored.
  static Catalog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<VariableGroup> group_of(const std::string& name) const;
  std::vector<std::string> in_group(VariableGroup g) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

struct Record {
  std::string subject;
  int month = 0;
  std::string variable;
  std::optional<double> value;  // diagnosis stored as class index 0/1/2
  int line = 0;                 // source line, 0 when built in memory
};

class SubjectTable {
 public:
  using Key = std::tuple<std::string, int, std::string>;

  /// Throws InputError on a duplicate (subject, month, variable).
  void add(Record r);
  std::optional<double> value(const std::string& subject, int month, const std::string& variable) const;
  bool has_record(const std::string& subject, int month, const std::string& variable) const;
  /// Sorted subject ids.
  std::vector<std::string> subjects() const;
  const std::map<Key, Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::map<Key, Record> records_;
};

/// Parses `subject_id,month,variable,value` (header required). Empty value =
/// missing; diagnosis values may be labels (NC/MCI/AD) or codes 0/1/2.
SubjectTable load_csv(const std::filesystem::path& path, const Catalog& catalog, bool allow_extra = false);
SubjectTable parse_csv(std::istream& in, const Catalog& catalog, bool allow_extra = false);
void write_csv(std::ostream& out, const SubjectTable& table, const Catalog& catalog);

/// Diagnosis label to class index; throws InputError on unknown labels.
int diagnosis_index(const std::string& label);

/// One row per label; missing labels give an all-missing row.
ViewData encode_diagnosis(const std::vector<std::optional<std::string>>& labels);
/// argmax per observed row; std::nullopt for rows with any missing cell.
std::vector<std::optional<std::string>> decode_diagnosis(const ViewData& block);

struct WindowLayout {
  int visit_step = 6;
  std::vector<int> lags = {-30, -24, -18, -12, -6};  // strictly increasing, negative
  std::vector<int> train_targets = {6, 12, 18, 24, 30};
  int test_target = 36;
  int min_lead = 12;
  /// Restricts input columns to these variables (all catalog inputs when unset).
  std::optional<std::set<std::string>> input_variables;
  /// Output views in order.
  std::vector<VariableGroup> outputs = {VariableGroup::D, VariableGroup::V, VariableGroup::A};

  void validate() const;
  int last_input_month() const { return test_target - min_lead; }

  /// `key = value` lines (visit_step, lags, train_targets, test_target,
  /// min_lead, outputs, inputs); lists are comma separated. Unset keys keep
  /// their defaults.
  static WindowLayout parse(std::istream& in);
  static WindowLayout load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
};

struct WindowView {
  enum class Kind { ti, td_lag, d_lag, output };
  Kind kind = Kind::ti;
  int lag = 0;                              // for lag views
  VariableGroup group = VariableGroup::TI;  // output group for output views
  std::vector<std::string> variables;       // source variable per column
  std::vector<int> class_index;             // indicator class per column, -1 otherwise
  ViewSpec spec;
};

struct SampleInfo {
  std::string subject;
  int target_month = 0;
  int window = 0;  // 1-based train window, 0 for the test sample
  bool is_test = false;
};

struct WindowedData {
  std::vector<WindowView> views;
  std::vector<SampleInfo> samples;  // train samples first, then test samples
  Eigen::Index n_train = 0;
  /// All samples; test outputs masked.
  std::vector<ViewData> data;
  /// Test rows only; outputs carry the true target values where known.
  std::vector<ViewData> test_truth;
  /// Month feeding each (view, sample), std::nullopt when the cell is
  /// structurally empty (before month 0 or excluded by the lead rule).
  std::vector<std::vector<std::optional<int>>> cell_month;

  Eigen::Index samples_count() const { return static_cast<Eigen::Index>(samples.size()); }
  std::vector<ViewData> train() const;
  std::vector<ViewData> test() const;
  std::vector<ViewSpec> specs() const;
  std::optional<std::size_t> output_view(VariableGroup g) const;
};

/// Default per-view settings: feature selection on TI and TD views; learning
/// rate 1/iteration for diagnosis views, 1 for the A output, 0.9 otherwise.
ViewSpec default_view_spec(const WindowView& view, int view_id, int dim);

WindowedData build_windows(const SubjectTable& table, const Catalog& catalog, const WindowLayout& layout);

/// Per-feature z-scoring statistics over observed entries of `rows` rows
/// (the training rows). Indicator views are left unscaled; constant
/// features get scale 1.
Standardizer fit_standardizer(const std::vector<ViewData>& views, const std::vector<ViewSpec>& specs,
                              Eigen::Index rows);
std::vector<ViewData> apply_standardizer(const Standardizer& s, std::vector<ViewData> views);
std::vector<ViewData> invert_standardizer(const Standardizer& s, std::vector<ViewData> views);

}  // namespace latentline
