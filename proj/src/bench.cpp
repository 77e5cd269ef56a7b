#include "latentline/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <ostream>
#include <sstream>
#include <thread>

#include "latentline/metrics.hpp"
#include "latentline/predict.hpp"

namespace latentline {

int default_k_init(const WindowedData& windows) {
  Eigen::Index cols = 0;
  for (const auto& v : windows.views) cols += static_cast<Eigen::Index>(v.variables.size());
  return static_cast<int>(std::min<Eigen::Index>({windows.samples_count(), cols, 50}));
}

FitResult fit_windows(const WindowedData& windows, FitOptions options) {
  const auto specs = windows.specs();
  Standardizer scaling = fit_standardizer(windows.data, specs, windows.n_train);
  const Dataset data = validate_dataset(specs, apply_standardizer(scaling, windows.data));
  if (options.hyper.k_init <= 0) options.hyper.k_init = default_k_init(windows);
  FitResult result = fit(data, options);
  result.state.scaling = std::move(scaling);
  return result;
}

BenchmarkSpec BenchmarkSpec::preset(const std::string& name) {
  BenchmarkSpec s;
  s.name = name;
  s.fit.hyper.k_init = 0;
  if (name == "appendixA") {
    s.tasks = {VariableGroup::V, VariableGroup::A, VariableGroup::D};
    s.subsets = {SubsetKind::target, SubsetKind::md, SubsetKind::md_target};
  } else if (name == "multitask") {
    s.multitask = true;
    s.tasks = {VariableGroup::D, VariableGroup::V, VariableGroup::A};
    s.subsets = {SubsetKind::all};
  } else {
    throw InputError("unknown benchmark spec '" + name + "' (expected appendixA or multitask)");
  }
  return s;
}

void BenchmarkSpec::validate() const {
  if (tasks.empty()) throw InputError("benchmark: no tasks");
  if (subsets.empty()) throw InputError("benchmark: no input subsets");
  if (seeds.empty()) throw InputError("benchmark: no seeds");
  if (folds < 2) throw InputError("benchmark: folds must be >= 2");
  for (auto t : tasks) {
    if (t != VariableGroup::D && t != VariableGroup::V && t != VariableGroup::A) {
      throw InputError("benchmark: tasks must be D, V or A");
    }
  }
  layout.validate();
}

std::string subset_name(SubsetKind kind, VariableGroup task) {
  switch (kind) {
    case SubsetKind::target: return to_string(task);
    case SubsetKind::md: return "MD";
    case SubsetKind::md_target: return std::string("MD+") + to_string(task);
    case SubsetKind::all: return "all";
  }
  return "?";
}

unsigned worker_count() {
  const char* env = std::getenv("LATENTLINE_THREADS");
  long requested = 0;
  if (env && *env) {
    char* end = nullptr;
    requested = std::strtol(env, &end, 10);
    if (*end != '\0' || requested < 0) throw InputError(std::string("LATENTLINE_THREADS must be >= 0, got '") + env + "'");
  }
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Problem {
  SubsetKind subset;
  std::vector<VariableGroup> tasks;
  WindowLayout layout;
  std::shared_ptr<const WindowedData> windows;
  std::string error;
};

std::optional<std::set<std::string>> subset_variables(SubsetKind kind, VariableGroup task, const Catalog& catalog) {
  if (kind == SubsetKind::all) return std::nullopt;
  std::set<std::string> vars;
  if (kind != SubsetKind::md) {
    for (const auto& n : catalog.in_group(task)) vars.insert(n);
  }
  if (kind != SubsetKind::target) {
    for (auto g : {VariableGroup::TI, VariableGroup::TD}) {
      for (const auto& n : catalog.in_group(g)) vars.insert(n);
    }
  }
  return vars;
}

std::vector<Eigen::Index> test_indices(const WindowedData& w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = w.n_train; i < w.samples_count(); ++i) idx.push_back(i);
  return idx;
}

std::size_t output_index(const WindowedData& w, VariableGroup task) {
  const auto v = w.output_view(task);
  if (!v) throw InputError(std::string("no output view for task ") + to_string(task));
  return *v;
}

int row_label(const ViewData& v, Eigen::Index r) {
  Eigen::Index best = 0;
  v.values.row(r).maxCoeff(&best);
  return static_cast<int>(best);
}

bool row_observed(const ViewData& v, Eigen::Index r) { return v.mask.row(r).all(); }

/// Evaluates predicted test means (test rows x output columns) against the
/// stored truth.
double score_task(const WindowedData& w, VariableGroup task, const Matrix& test_scores_or_means, bool weighted) {
  const ViewData& truth = w.test_truth[output_index(w, task)];
  if (task == VariableGroup::D) {
    std::vector<int> labels;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < truth.rows(); ++r) {
      if (row_observed(truth, r)) {
        labels.push_back(row_label(truth, r));
        rows.push_back(r);
      }
    }
    if (rows.empty()) throw InputError("no test sample with an observed diagnosis");
    Matrix scores(static_cast<Eigen::Index>(rows.size()), test_scores_or_means.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) scores.row(static_cast<Eigen::Index>(i)) = test_scores_or_means.row(rows[i]);
    return mauc(scores, labels, weighted);
  }
  std::vector<double> t, p;
  for (Eigen::Index r = 0; r < truth.rows(); ++r) {
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
      if (truth.mask(r, c)) {
        t.push_back(truth.values(r, c));
        p.push_back(test_scores_or_means(r, c));
      }
    }
  }
  if (t.empty()) throw InputError(std::string("no test sample with an observed ") + to_string(task));
  return mae(t, p);
}

const char* metric_of(VariableGroup task) { return task == VariableGroup::D ? "mauc" : "mae"; }

ResultRow make_row(std::string method, const Problem& p, VariableGroup task, std::uint64_t seed) {
  ResultRow r;
  r.method = std::move(method);
  r.input_subset = subset_name(p.subset, task);
  r.task = to_string(task);
  r.metric = metric_of(task);
  r.value = std::numeric_limits<double>::quiet_NaN();
  r.seed = seed;
  return r;
}

std::vector<ResultRow> run_sshiba(const BenchmarkSpec& spec, const Problem& p, std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (auto t : p.tasks) rows.push_back(make_row("sshiba", p, t, seed));
  try {
    FitOptions options = spec.fit;
    options.hyper.seed = seed;
    const FitResult fitted = fit_windows(*p.windows, options);
    const auto idx = test_indices(*p.windows);
    for (std::size_t i = 0; i < p.tasks.size(); ++i) {
      try {
        const std::size_t view = output_index(*p.windows, p.tasks[i]);
        const Prediction pred = predict_view(fitted.state, idx, view);
        const Matrix values = p.tasks[i] == VariableGroup::D ? scores_from_means(pred.mean).scores : pred.mean;
        rows[i].value = score_task(*p.windows, p.tasks[i], values, spec.class_weighted_mauc);
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (auto& r : rows) r.error = e.what();
  }
  return rows;
}

struct DesignMatrices {
  ViewData train, test;
  CellContext train_ctx, test_ctx;
};

/// Input views stacked side by side. Views that are structurally empty for
/// every test sample carry no usable signal at prediction time and are left
/// out.
DesignMatrices design(const WindowedData& w) {
  std::vector<std::size_t> views;
  for (std::size_t m = 0; m < w.views.size(); ++m) {
    if (w.views[m].kind == WindowView::Kind::output) continue;
    bool usable = false;
    for (Eigen::Index i = w.n_train; i < w.samples_count(); ++i) usable = usable || w.cell_month[m][static_cast<std::size_t>(i)];
    if (usable) views.push_back(m);
  }
  Eigen::Index cols = 0;
  for (auto m : views) cols += w.data[m].cols();
  if (cols == 0) throw InputError("no usable input columns for the test samples");
  const Eigen::Index n_train = w.n_train;
  const Eigen::Index n_test = w.samples_count() - n_train;

  DesignMatrices d;
  d.train = {Matrix(n_train, cols), Mask(n_train, cols)};
  d.test = {Matrix(n_test, cols), Mask(n_test, cols)};
  d.train_ctx.month = Eigen::MatrixXi(n_train, cols);
  d.test_ctx.month = Eigen::MatrixXi(n_test, cols);
  for (Eigen::Index i = 0; i < w.samples_count(); ++i) {
    (i < n_train ? d.train_ctx : d.test_ctx).row_subject.push_back(w.samples[static_cast<std::size_t>(i)].subject);
  }
  Eigen::Index c0 = 0;
  for (auto m : views) {
    const auto& v = w.data[m];
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      const auto& var = w.views[m].variables[static_cast<std::size_t>(c)];
      d.train_ctx.col_variable.push_back(var);
      d.test_ctx.col_variable.push_back(var);
      for (Eigen::Index i = 0; i < w.samples_count(); ++i) {
        const auto& month = w.cell_month[m][static_cast<std::size_t>(i)];
        const int mo = month ? *month : CellContext::kNoMonth;
        if (i < n_train) {
          d.train.values(i, c0 + c) = v.values(i, c);
          d.train.mask(i, c0 + c) = v.mask(i, c);
          d.train_ctx.month(i, c0 + c) = mo;
        } else {
          d.test.values(i - n_train, c0 + c) = v.values(i, c);
          d.test.mask(i - n_train, c0 + c) = v.mask(i, c);
          d.test_ctx.month(i - n_train, c0 + c) = mo;
        }
      }
    }
    c0 += v.cols();
  }
  return d;
}

Matrix take_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

ResultRow run_baseline(const BenchmarkSpec& spec, const Problem& p, VariableGroup task, ImputationStrategy imputer,
                       std::uint64_t seed) {
  const bool classify = task == VariableGroup::D;
  ResultRow row = make_row(std::string(classify ? "logistic+" : "ridge+") + to_string(imputer), p, task, seed);
  try {
    const WindowedData& w = *p.windows;
    const DesignMatrices d = design(w);
    const Matrix x_train = impute(d.train, d.train, imputer, &d.train_ctx, &d.train_ctx);
    const Matrix x_test = impute(d.train, d.test, imputer, &d.train_ctx, &d.test_ctx);
    const ViewData& out = w.data[output_index(w, task)];

    if (classify) {
      std::vector<Eigen::Index> rows;
      std::vector<int> labels;
      for (Eigen::Index i = 0; i < w.n_train; ++i) {
        if (row_observed(out, i)) {
          rows.push_back(i);
          labels.push_back(row_label(out, i));
        }
      }
      const auto model = logistic_fit_cv(take_rows(x_train, rows), labels, out.cols(), spec.folds, seed);
      row.value = score_task(w, task, model.scores(x_test), spec.class_weighted_mauc);
    } else {
      Matrix pred(x_test.rows(), out.cols());
      for (Eigen::Index c = 0; c < out.cols(); ++c) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < w.n_train; ++i) {
          if (out.mask(i, c)) rows.push_back(i);
        }
        Vector y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = out.values(rows[i], c);
        pred.col(c) = ridge_fit_cv(take_rows(x_train, rows), y, spec.folds, seed).predict(x_test);
      }
      row.value = score_task(w, task, pred, spec.class_weighted_mauc);
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<std::vector<ResultRow>> run_jobs(const std::vector<std::function<std::vector<ResultRow>()>>& jobs) {
  std::vector<std::vector<ResultRow>> results(jobs.size());
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) results[j] = jobs[j]();
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace

std::vector<ResultRow> run_benchmark(const BenchmarkSpec& spec, const SubjectTable& table, const Catalog& catalog,
                                     std::uint64_t seed) {
  spec.validate();
  std::vector<Problem> problems;
  if (spec.multitask) {
    for (auto s : spec.subsets) {
      Problem p{s, spec.tasks, spec.layout, nullptr, ""};
      p.layout.outputs = spec.tasks;
      p.layout.input_variables = subset_variables(s, spec.tasks.front(), catalog);
      problems.push_back(std::move(p));
    }
  } else {
    for (auto t : spec.tasks) {
      for (auto s : spec.subsets) {
        Problem p{s, {t}, spec.layout, nullptr, ""};
        p.layout.outputs = {t};
        p.layout.input_variables = subset_variables(s, t, catalog);
        problems.push_back(std::move(p));
      }
    }
  }
  for (auto& p : problems) {
    try {
      p.windows = std::make_shared<const WindowedData>(build_windows(table, catalog, p.layout));
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  }

  std::vector<std::function<std::vector<ResultRow>()>> jobs;
  for (const auto& p : problems) {
    auto failed = [&p, seed](std::string method, VariableGroup t) {
      ResultRow r = make_row(std::move(method), p, t, seed);
      r.error = p.error;
      return r;
    };
    if (spec.include_sshiba) {
      jobs.emplace_back([&spec, &p, seed, failed] {
        if (!p.windows) {
          std::vector<ResultRow> rows;
          for (auto t : p.tasks) rows.push_back(failed("sshiba", t));
          return rows;
        }
        return run_sshiba(spec, p, seed);
      });
    }
    for (auto t : p.tasks) {
      for (auto imp : spec.imputers) {
        jobs.emplace_back([&spec, &p, t, imp, seed, failed] {
          if (!p.windows) {
            return std::vector<ResultRow>{
                failed(std::string(t == VariableGroup::D ? "logistic+" : "ridge+") + to_string(imp), t)};
          }
          return std::vector<ResultRow>{run_baseline(spec, p, t, imp, seed)};
        });
      }
    }
  }
  std::vector<ResultRow> rows;
  for (auto& chunk : run_jobs(jobs)) rows.insert(rows.end(), chunk.begin(), chunk.end());
  return rows;
}

std::vector<ResultRow> run_synthetic_benchmark(const BenchmarkSpec& spec, CohortConfig cohort) {
  spec.validate();
  std::vector<ResultRow> rows;
  for (auto seed : spec.seeds) {
    cohort.seed = seed;
    const Cohort c = generate_cohort(cohort);
    auto part = run_benchmark(spec, c.table, c.catalog, seed);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

template <typename T>
void remember(std::vector<T>& order, const T& value) {
  if (std::find(order.begin(), order.end(), value) == order.end()) order.push_back(value);
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "method,input_subset,task,metric,value,seed,error\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << csv_field(r.method) << ',' << csv_field(r.input_subset) << ',' << r.task << ',' << r.metric << ',';
    if (std::isnan(r.value)) {
      out << "nan";
    } else {
      out << r.value;
    }
    out << ',' << r.seed << ',' << csv_field(r.error) << '\n';
  }
}

void write_results_report(std::ostream& out, const std::vector<ResultRow>& rows) {
  std::vector<std::string> tasks;
  for (const auto& r : rows) remember(tasks, r.task);
  for (const auto& task : tasks) {
    std::vector<std::string> methods, subsets;
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    std::map<std::pair<std::string, std::string>, int> failures;
    std::string metric;
    for (const auto& r : rows) {
      if (r.task != task) continue;
      metric = r.metric;
      remember(methods, r.method);
      remember(subsets, r.input_subset);
      if (std::isnan(r.value)) {
        ++failures[{r.method, r.input_subset}];
      } else {
        values[{r.method, r.input_subset}].push_back(r.value);
      }
    }
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"method"});
    for (const auto& s : subsets) cells.back().push_back(s);
    for (const auto& m : methods) {
      cells.push_back({m});
      for (const auto& s : subsets) {
        const auto& v = values[{m, s}];
        std::ostringstream cell;
        if (v.empty()) {
          cell << (failures[{m, s}] ? "error" : "-");
        } else {
          double mean = 0.0;
          for (double x : v) mean += x;
          mean /= static_cast<double>(v.size());
          cell << std::fixed << std::setprecision(4) << mean;
          if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            cell << " +- " << std::sqrt(ss / static_cast<double>(v.size() - 1));
          }
          if (failures[{m, s}]) cell << " (" << failures[{m, s}] << " failed)";
        }
        cells.back().push_back(cell.str());
      }
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    out << "Task " << task << " (" << metric << ")\n";
    for (std::size_t l = 0; l < cells.size(); ++l) {
      for (std::size_t c = 0; c < cells[l].size(); ++c) {
        out << (c ? "  " : "") << (c ? std::right : std::left) << std::setw(static_cast<int>(width[c])) << cells[l][c];
      }
      out << '\n';
      if (l == 0) {
        std::size_t total = 0;
        for (auto w : width) total += w + 2;
        out << std::string(total - 2, '-') << '\n';
      }
    }
    out << '\n';
  }
}

}  // namespace latentline
