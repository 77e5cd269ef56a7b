// latentline command-line front end.
#include "latentline/bench.hpp"
#include "latentline/model_io.hpp"
#include "latentline/predict.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace latentline;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

/// Runs `fn` with a stream for `path` ("-" = stdout).
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw InputError("failed writing '" + path + "'");
}

Catalog catalog_from(const std::string& path) {
  return path.empty() ? Catalog::default_catalog() : Catalog::load(path);
}

WindowLayout layout_from(const std::string& path) { return path.empty() ? WindowLayout{} : WindowLayout::load(path); }

LearningRate parse_rate(const std::string& text) {
  if (text == "inv") return LearningRate::inverse_iteration();
  double rho = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), rho);
  if (ec != std::errc() || ptr != text.data() + text.size() || !(rho > 0.0 && rho <= 1.0)) {
    throw InputError("learning rate must be 'inv' or a number in (0, 1], got '" + text + "'");
  }
  return LearningRate::constant_rate(rho);
}

void apply_rate_overrides(WindowedData& w, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InputError("--lr-view expects m=rho or m=inv, got '" + item + "'");
    int view = 0;
    const std::string head = item.substr(0, eq);
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), view);
    if (ec != std::errc() || ptr != head.data() + head.size() || view < 1 ||
        view > static_cast<int>(w.views.size())) {
      throw InputError("--lr-view: view must be in 1.." + std::to_string(w.views.size()) + ", got '" + head + "'");
    }
    w.views[static_cast<std::size_t>(view - 1)].spec.learning_rate = parse_rate(item.substr(eq + 1));
  }
}

std::string column_name(const WindowView& v, std::size_t c) {
  const int cls = v.class_index[c];
  return cls < 0 ? v.variables[c] : v.variables[c] + ":" + diagnosis_labels()[static_cast<std::size_t>(cls)];
}

std::string format_value(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

const ModelContext& context_of(const ModelFile& model) {
  if (!model.context) throw InputError("model file carries no data context; refit it with the fit command");
  return *model.context;
}

/// Windows for `table` and a state whose samples line up with them: the
/// stored posterior when the data is what the model was fitted on, a fold-in
/// otherwise.
struct Resolved {
  WindowedData windows;
  ModelState state;
  bool folded_in = false;
};

bool same_as_fit(const ModelState& s, const std::vector<ViewData>& standardized) {
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    const auto& v = standardized[m];
    const auto& stored = s.views[m].missing;
    if (stored.mean.rows() != v.rows() || stored.mean.cols() != v.cols()) return false;
    if (v.mask.size() - v.observed_count() != stored.missing_count) return false;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        if (v.mask(i, j) && v.values(i, j) != stored.mean(i, j)) return false;
      }
    }
  }
  return true;
}

Resolved resolve(const ModelFile& model, const SubjectTable& table) {
  const auto& ctx = context_of(model);
  Resolved r{build_windows(table, ctx.catalog, ctx.layout), {}, false};
  const auto& specs = model.state.specs;
  if (r.windows.views.size() != specs.size()) throw InputError("data does not produce the model's views");
  for (std::size_t m = 0; m < specs.size(); ++m) {
    if (static_cast<int>(r.windows.views[m].variables.size()) != specs[m].dim) {
      throw InputError("data does not match the width of view " + std::to_string(m + 1));
    }
  }
  std::vector<ViewData> standardized = r.windows.data;
  if (model.state.scaling) standardized = apply_standardizer(*model.state.scaling, standardized);
  if (table.subjects() == ctx.subjects && same_as_fit(model.state, standardized)) {
    r.state = model.state;
    return r;
  }
  const Dataset data = validate_dataset(specs, std::move(standardized));
  r.state = infer_samples(model.state, data);
  r.folded_in = true;
  return r;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data, catalog, layout, out;
  int k_init = 0;
  int max_iter = 50000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::vector<std::string> lr;
  bool allow_extra = false;
};

void cmd_fit(const FitArgs& a) {
  const Catalog catalog = catalog_from(a.catalog);
  const WindowLayout layout = layout_from(a.layout);
  const SubjectTable table = load_csv(a.data, catalog, a.allow_extra);
  WindowedData w = build_windows(table, catalog, layout);
  apply_rate_overrides(w, a.lr);

  FitOptions options;
  options.hyper.k_init = a.k_init > 0 ? a.k_init : default_k_init(w);
  options.hyper.max_iter = a.max_iter;
  options.hyper.elbo_rel_tol = a.tol;
  options.hyper.seed = a.seed;
  options.hyper.validate();

  std::cout << "fit  tol=" << a.tol << "  max_iter=" << a.max_iter << "  k_init=" << options.hyper.k_init
            << "  seed=" << a.seed << '\n';
  std::cout << "samples      " << w.samples_count() << " (" << w.n_train << " train)\n";
  std::cout << "views        " << w.views.size() << '\n';
  const FitResult result = fit_windows(w, options);
  save_model(a.out, {result.state, ModelContext{catalog, layout, table.subjects()}});

  const auto& r = result.report;
  std::cout << "iterations   " << r.iterations << '\n'
            << "halted_on    " << to_string(r.halted_on) << '\n'
            << "k_final      " << r.k_final << '\n'
            << "final_elbo   " << std::setprecision(10) << (r.elbo_trace.empty() ? NAN : r.elbo_trace.back()) << '\n'
            << "wall_time_s  " << std::setprecision(4) << r.wall_time << '\n'
            << "model        " << a.out << '\n';
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, data, out;
  std::vector<int> views;
  bool allow_extra = false;
};

void cmd_predict(const PredictArgs& a) {
  const ModelFile model = load_model(a.model);
  const SubjectTable table = load_csv(a.data, context_of(model).catalog, a.allow_extra);
  const Resolved r = resolve(model, table);
  std::vector<std::size_t> views;
  if (a.views.empty()) {
    for (std::size_t m = 0; m < r.windows.views.size(); ++m) {
      if (r.windows.views[m].kind == WindowView::Kind::output) views.push_back(m);
    }
  } else {
    for (int v : a.views) {
      if (v < 1 || v > static_cast<int>(r.windows.views.size())) {
        throw InputError("--views: view " + std::to_string(v) + " out of range 1.." +
                         std::to_string(r.windows.views.size()));
      }
      views.push_back(static_cast<std::size_t>(v - 1));
    }
  }
  std::vector<Eigen::Index> test;
  for (Eigen::Index i = r.windows.n_train; i < r.windows.samples_count(); ++i) test.push_back(i);

  with_output(a.out, [&](std::ostream& out) {
    out << "subject_id,view,column,mean,variance,label\n";
    for (auto m : views) {
      const auto& view = r.windows.views[m];
      const Prediction p = predict_view(r.state, test, m);
      std::optional<Classification> cls;
      if (r.state.specs[m].kind == ViewKind::indicator) cls = scores_from_means(p.mean);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& subject = r.windows.samples[static_cast<std::size_t>(test[i])].subject;
        for (std::size_t c = 0; c < view.variables.size(); ++c) {
          const auto row = static_cast<Eigen::Index>(i);
          const auto col = static_cast<Eigen::Index>(c);
          out << subject << ',' << m + 1 << ',' << column_name(view, c) << ',' << format_value(p.mean(row, col)) << ','
              << format_value(p.variance(row, col)) << ',';
          if (cls) out << diagnosis_labels()[static_cast<std::size_t>(cls->labels[i])];
          out << '\n';
        }
      }
    }
  });
}

// ---------------------------------------------------------------- impute

struct ImputeArgs {
  std::string model, data, out;
  bool allow_extra = false;
};

std::string value_text(const Catalog& catalog, const std::string& variable, double value) {
  if (catalog.group_of(variable) == VariableGroup::D) return diagnosis_labels()[static_cast<std::size_t>(value)];
  return format_value(value);
}

void cmd_impute(const ImputeArgs& a) {
  const ModelFile model = load_model(a.model);
  const Catalog& catalog = context_of(model).catalog;
  const SubjectTable table = load_csv(a.data, catalog, a.allow_extra);
  const Resolved r = resolve(model, table);
  auto cells = estimate_cells(r.state, r.windows, table, catalog);
  // Observed records outside the window grid are passed through unchanged.
  for (const auto& [key, rec] : table.records()) {
    if (rec.value && !cells.count(key)) cells.emplace(key, CellEstimate{CellSource::observed, *rec.value, 0.0, {}});
  }
  std::size_t imputed = 0;
  with_output(a.out, [&](std::ostream& out) {
    out << "subject_id,month,variable,value,source,variance\n";
    for (const auto& [key, e] : cells) {
      const auto& [subject, month, variable] = key;
      const bool obs = e.source == CellSource::observed;
      imputed += obs ? 0 : 1;
      out << subject << ',' << month << ',' << variable << ',' << value_text(catalog, variable, e.value) << ','
          << (obs ? "observed" : "imputed") << ',' << format_value(e.variance) << '\n';
    }
  });
  std::cerr << "imputed " << imputed << " of " << cells.size() << " cells\n";
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string model, data, out, subject, variable, normalize = "raw";
  int view = 0;
  double threshold = -1.0;
  bool allow_extra = false;
};

std::vector<WindowView> planned_views(const ModelFile& model) {
  const auto& ctx = context_of(model);
  return build_windows(SubjectTable{}, ctx.catalog, ctx.layout).views;
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  for (std::size_t l = 0; l < rows.size(); ++l) {
    for (std::size_t c = 0; c < rows[l].size(); ++c) {
      out << (c ? "  " : "") << (c ? std::right : std::left) << std::setw(static_cast<int>(width[c])) << rows[l][c];
    }
    out << '\n';
    if (l == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void cmd_relevance(const ReportArgs& a) {
  const ModelFile model = load_model(a.model);
  const auto plan = planned_views(model);
  const auto& s = model.state;
  Normalization norm;
  if (a.normalize == "raw") {
    norm = Normalization::raw;
  } else if (a.normalize == "unit_sum") {
    norm = Normalization::unit_sum;
  } else {
    throw InputError("--normalize must be raw or unit_sum");
  }
  std::vector<std::size_t> views;
  if (a.view > 0) {
    if (a.view > static_cast<int>(s.views.size())) throw InputError("--view out of range");
    views.push_back(static_cast<std::size_t>(a.view - 1));
  } else {
    for (std::size_t m = 0; m < s.views.size(); ++m) {
      if (s.specs[m].feature_selection) views.push_back(m);
    }
    if (views.empty()) throw InputError("no view of this model uses feature selection");
  }
  std::vector<std::vector<std::string>> text{{"view", "name", "variable", "relevance", ""}};
  std::ostringstream csv;
  csv << "view,name,variable,relevance\n";
  for (auto m : views) {
    const auto p = feature_relevance(s, m, norm);
    const double top = p.scores.maxCoeff();
    for (Eigen::Index d = 0; d < p.scores.size(); ++d) {
      const std::string var = column_name(plan[m], static_cast<std::size_t>(d));
      csv << m + 1 << ',' << s.specs[m].name << ',' << var << ',' << format_value(p.scores(d)) << '\n';
      const int bar = top > 0 ? static_cast<int>(std::lround(20.0 * p.scores(d) / top)) : 0;
      text.push_back({std::to_string(m + 1), s.specs[m].name, var, fixed(p.scores(d)), std::string(static_cast<std::size_t>(bar), '#')});
    }
  }
  print_table(std::cout, text);
  if (!a.out.empty()) with_output(a.out, [&](std::ostream& out) { out << csv.str(); });
}

void cmd_factors(const ReportArgs& a) {
  const ModelFile model = load_model(a.model);
  const auto& s = model.state;
  const FactorActivity act = factor_activity(s, a.threshold >= 0 ? std::optional<double>(a.threshold) : std::nullopt);
  std::vector<std::vector<std::string>> text{{"view", "name"}};
  for (int k = 0; k < s.k_current; ++k) text.front().push_back(std::to_string(k + 1));
  std::ostringstream csv;
  csv << "view,name,factor,active,max_abs_loading\n";
  for (std::size_t m = 0; m < s.views.size(); ++m) {
    text.push_back({std::to_string(m + 1), s.specs[m].name});
    for (int k = 0; k < s.k_current; ++k) {
      const bool on = act.matrix(static_cast<Eigen::Index>(m), k);
      const double peak = s.views[m].w.mean.col(k).cwiseAbs().maxCoeff();
      csv << m + 1 << ',' << s.specs[m].name << ',' << k + 1 << ',' << (on ? 1 : 0) << ',' << format_value(peak) << '\n';
      text.back().push_back(on ? "X" : ".");
    }
  }
  std::cout << "factor activity (threshold " << act.threshold << ")\n";
  print_table(std::cout, text);
  if (!a.out.empty()) with_output(a.out, [&](std::ostream& out) { out << csv.str(); });
}

void cmd_trajectory(const ReportArgs& a) {
  const ModelFile model = load_model(a.model);
  const Catalog& catalog = context_of(model).catalog;
  const SubjectTable table = load_csv(a.data, catalog, a.allow_extra);
  const Resolved r = resolve(model, table);
  std::string variable = a.variable;
  if (variable.empty()) {
    const auto dx = catalog.in_group(VariableGroup::D);
    if (dx.empty()) throw InputError("catalog has no diagnosis variable; pass --variable");
    variable = dx.front();
  }
  const auto points = subject_trajectory(r.state, r.windows, table, catalog, a.subject, variable);
  const bool dx = catalog.group_of(variable) == VariableGroup::D;

  std::ostringstream csv;
  csv << "subject_id,month,variable,value,source,variance";
  std::vector<std::vector<std::string>> text{{"month", "value", "source", "sd"}};
  if (dx) {
    for (const auto& l : diagnosis_labels()) {
      csv << ",score_" << l;
      text.front().push_back("p(" + l + ")");
    }
  }
  csv << '\n';
  for (const auto& pt : points) {
    const auto& e = pt.estimate;
    const std::string source = e.source == CellSource::observed ? "observed" : "imputed";
    csv << a.subject << ',' << pt.month << ',' << variable << ',' << value_text(catalog, variable, e.value) << ','
        << source << ',' << format_value(e.variance);
    std::vector<std::string> row{std::to_string(pt.month), dx ? value_text(catalog, variable, e.value) : fixed(e.value),
                                 source, fixed(std::sqrt(e.variance))};
    if (dx) {
      for (Eigen::Index c = 0; c < e.class_scores->size(); ++c) {
        csv << ',' << format_value((*e.class_scores)(c));
        row.push_back(fixed((*e.class_scores)(c), 3));
      }
    }
    csv << '\n';
    text.push_back(std::move(row));
  }
  std::cout << "subject " << a.subject << "  variable " << variable << (r.folded_in ? "  (folded in)" : "") << '\n';
  print_table(std::cout, text);
  if (!a.out.empty()) with_output(a.out, [&](std::ostream& out) { out << csv.str(); });
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  CohortConfig cohort;
  std::string out, catalog_out, complete_out;
};

void cmd_synth(const SynthArgs& a) {
  const Cohort c = generate_cohort(a.cohort);
  with_output(a.out, [&](std::ostream& out) { write_csv(out, c.table, c.catalog); });
  if (!a.catalog_out.empty()) c.catalog.save(a.catalog_out);
  if (!a.complete_out.empty()) {
    with_output(a.complete_out, [&](std::ostream& out) { write_csv(out, c.complete, c.catalog); });
  }
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string spec = "appendixA", synthetic, data, catalog, layout, out, report;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0;
  int subjects = 0;
  int k_init = 0;
  int max_iter = 50000;
  double tol = 1e-6;
  int folds = 10;
  bool unweighted = false;
  bool allow_extra = false;
};

void cmd_bench(const BenchArgs& a) {
  BenchmarkSpec spec = BenchmarkSpec::preset(a.spec);
  spec.seeds = a.seeds.empty() ? std::vector<std::uint64_t>{a.seed} : a.seeds;
  spec.fit.hyper.k_init = a.k_init;
  spec.fit.hyper.max_iter = a.max_iter;
  spec.fit.hyper.elbo_rel_tol = a.tol;
  spec.folds = a.folds;
  spec.class_weighted_mauc = !a.unweighted;
  if (!a.layout.empty()) spec.layout = WindowLayout::load(a.layout);

  std::vector<ResultRow> rows;
  if (!a.synthetic.empty()) {
    if (!a.data.empty()) throw InputError("pass either --synthetic or --data, not both");
    if (a.synthetic != "default") throw InputError("--synthetic supports only 'default'");
    CohortConfig cohort;
    if (a.subjects > 0) cohort.n_subjects = a.subjects;
    rows = run_synthetic_benchmark(spec, cohort);
  } else {
    if (a.data.empty()) throw InputError("bench needs --synthetic default or --data");
    const Catalog catalog = catalog_from(a.catalog);
    const SubjectTable table = load_csv(a.data, catalog, a.allow_extra);
    for (auto seed : spec.seeds) {
      auto part = run_benchmark(spec, table, catalog, seed);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  if (!a.out.empty()) with_output(a.out, [&](std::ostream& out) { write_results_csv(out, rows); });
  with_output(a.report, [&](std::ostream& out) {
    out << "benchmark " << spec.name << "  seeds=" << spec.seeds.size() << "  tol=" << a.tol << '\n';
    write_results_report(out, rows);
  });
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "cell failed: " << r.method << " / " << r.input_subset << " / " << r.task << " seed " << r.seed
                << ": " << r.error << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse multi-view Bayesian factor models for longitudinal forecasting and imputation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "latentline 1.0");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit a model to a long-format CSV");
  fit->add_option("--data", fit_args.data, "Long-format CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--catalog", fit_args.catalog, "variable,group file (default: built-in catalog)")->check(CLI::ExistingFile);
  fit->add_option("--layout", fit_args.layout, "Window layout file (key = value lines)")->check(CLI::ExistingFile);
  fit->add_option("--k-init", fit_args.k_init, "Initial latent factors (default min(N, columns, 50))");
  fit->add_option("--max-iter", fit_args.max_iter, "Iteration cap")->capture_default_str();
  fit->add_option("--tol", fit_args.tol, "Relative ELBO tolerance")->capture_default_str();
  fit->add_option("--seed", fit_args.seed, "Random seed")->capture_default_str();
  fit->add_option("--lr-view", fit_args.lr, "Learning rate override m=rho or m=inv (repeatable)");
  fit->add_option("--out", fit_args.out, "Model file to write")->required();
  fit->add_flag("--allow-extra", fit_args.allow_extra, "Ignore CSV variables missing from the catalog");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Predict views for the test-target samples");
  predict->add_option("--model", predict_args.model)->required()->check(CLI::ExistingFile);
  predict->add_option("--data", predict_args.data)->required()->check(CLI::ExistingFile);
  predict->add_option("--views", predict_args.views, "1-based view ids (default: output views)")->delimiter(',');
  predict->add_option("--out", predict_args.out, "CSV output (default stdout)");
  predict->add_flag("--allow-extra", predict_args.allow_extra);

  ImputeArgs impute_args;
  auto* impute_cmd = app.add_subcommand("impute", "Complete every window cell of a long-format CSV");
  impute_cmd->add_option("--model", impute_args.model)->required()->check(CLI::ExistingFile);
  impute_cmd->add_option("--data", impute_args.data)->required()->check(CLI::ExistingFile);
  impute_cmd->add_option("--out", impute_args.out, "CSV output (default stdout)");
  impute_cmd->add_flag("--allow-extra", impute_args.allow_extra);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Relevance, factor activity and trajectory reports");
  report->require_subcommand(1);
  auto* relevance = report->add_subcommand("relevance", "Feature relevance 1/<gamma> per view");
  relevance->add_option("--model", report_args.model)->required()->check(CLI::ExistingFile);
  relevance->add_option("--view", report_args.view, "1-based view (default: all feature-selection views)");
  relevance->add_option("--normalize", report_args.normalize, "raw or unit_sum")->capture_default_str();
  relevance->add_option("--out", report_args.out, "CSV output");
  auto* factors = report->add_subcommand("factors", "Latent factor activity per view");
  factors->add_option("--model", report_args.model)->required()->check(CLI::ExistingFile);
  factors->add_option("--threshold", report_args.threshold, "Activity threshold (default: prune threshold)");
  factors->add_option("--out", report_args.out, "CSV output");
  auto* trajectory = report->add_subcommand("trajectory", "Observed and imputed values of one subject");
  trajectory->add_option("--model", report_args.model)->required()->check(CLI::ExistingFile);
  trajectory->add_option("--data", report_args.data)->required()->check(CLI::ExistingFile);
  trajectory->add_option("--subject", report_args.subject)->required();
  trajectory->add_option("--variable", report_args.variable, "Variable (default: diagnosis)");
  trajectory->add_option("--out", report_args.out, "CSV output");
  trajectory->add_flag("--allow-extra", report_args.allow_extra);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic longitudinal cohort");
  synth->add_option("--subjects", synth_args.cohort.n_subjects)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--latent-dim", synth_args.cohort.latent_dim)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--ti-vars", synth_args.cohort.ti_vars)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--td-vars", synth_args.cohort.td_vars)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--noise-sd", synth_args.cohort.noise_sd)->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_args.cohort.seed)->capture_default_str();
  synth->add_option("--out", synth_args.out, "CSV output (default stdout)");
  synth->add_option("--catalog-out", synth_args.catalog_out, "Write the cohort's catalog");
  synth->add_option("--complete-out", synth_args.complete_out, "Write the values before masking");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Compare SSHIBA with imputer + ridge/logistic baselines");
  bench->add_option("--spec", bench_args.spec, "appendixA or multitask")->capture_default_str();
  bench->add_option("--synthetic", bench_args.synthetic, "Synthetic cohort preset ('default')");
  bench->add_option("--data", bench_args.data, "Long-format CSV instead of a synthetic cohort")->check(CLI::ExistingFile);
  bench->add_option("--catalog", bench_args.catalog)->check(CLI::ExistingFile);
  bench->add_option("--layout", bench_args.layout)->check(CLI::ExistingFile);
  bench->add_option("--seed", bench_args.seed)->capture_default_str();
  bench->add_option("--seeds", bench_args.seeds, "Comma-separated seeds (overrides --seed)")->delimiter(',');
  bench->add_option("--subjects", bench_args.subjects, "Synthetic cohort size")->check(CLI::PositiveNumber);
  bench->add_option("--k-init", bench_args.k_init, "Initial latent factors (default min(N, columns, 50))");
  bench->add_option("--max-iter", bench_args.max_iter)->capture_default_str();
  bench->add_option("--tol", bench_args.tol)->capture_default_str();
  bench->add_option("--folds", bench_args.folds)->capture_default_str();
  bench->add_flag("--unweighted-mauc", bench_args.unweighted, "Plain mean of per-class AUCs");
  bench->add_option("--out", bench_args.out, "Results CSV");
  bench->add_option("--report", bench_args.report, "Text report (default stdout)");
  bench->add_flag("--allow-extra", bench_args.allow_extra);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit) cmd_fit(fit_args);
    if (*predict) cmd_predict(predict_args);
    if (*impute_cmd) cmd_impute(impute_args);
    if (*relevance) cmd_relevance(report_args);
    if (*factors) cmd_factors(report_args);
    if (*trajectory) cmd_trajectory(report_args);
    if (*synth) cmd_synth(synth_args);
    if (*bench) cmd_bench(bench_args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
