#include "latentline/longitudinal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentline {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::optional<int> parse_int(const std::string& text) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace

const char* to_string(VariableGroup g) {
  switch (g) {
    case VariableGroup::TI: return "TI";
    case VariableGroup::TD: return "TD";
    case VariableGroup::V: return "V";
    case VariableGroup::A: return "A";
    case VariableGroup::D: return "D";
  }
  return "?";
}

VariableGroup parse_group(const std::string& text) {
  const std::string t = trim(text);
  if (t == "TI") return VariableGroup::TI;
  if (t == "TD") return VariableGroup::TD;
  if (t == "V") return VariableGroup::V;
  if (t == "A") return VariableGroup::A;
  if (t == "D") return VariableGroup::D;
  throw InputError("unknown variable group '" + t + "'");
}

Catalog::Catalog(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].name, i).second) {
      throw InputError("catalog lists variable '" + entries_[i].name + "' twice");
    }
  }
  if (in_group(VariableGroup::D).size() > 1) throw InputError("catalog may hold at most one D variable");
}

Catalog Catalog::default_catalog() {
  using G = VariableGroup;
  std::vector<Entry> e;
  for (const char* n : {"Age", "Sex", "APOE4", "Education", "AngularLeft", "AngularRight",
                        "CingulumPostBilateral", "TemporalLeft", "TemporalRight"}) {
    e.push_back({n, G::TI});
  }
  for (const char* n : {"MMSE", "RAVLT_learning", "RAVLT_immediate", "RAVLT_perc_forgetting", "FAQ",
                        "CerebellumGreyMatter", "WholeCerebellum", "ErodedSubcorticalWM", "Frontal",
                        "Cingulate", "Parietal", "Temporal", "ABETA", "TAU", "PTAU", "Hippocampus",
                        "WholeBrain", "Entorhinal", "Fusiform", "MidTemp", "ICV"}) {
    e.push_back({n, G::TD});
  }
  e.push_back({"Ventricles", G::V});
  e.push_back({"ADAS13", G::A});
  e.push_back({"DX", G::D});
  return Catalog(std::move(e));
}

Catalog Catalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open catalog " + path.string());
  std::vector<Entry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_commas(t);
    if (fields.size() != 2) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 'variable,group'");
    }
    try {
      entries.push_back({trim(fields[0]), parse_group(fields[1])});
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return Catalog(std::move(entries));
}

void Catalog::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write catalog " + path.string());
  for (const auto& e : entries_) out << e.name << ',' << to_string(e.group) << '\n';
}

std::optional<VariableGroup> Catalog::group_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].group;
}

std::vector<std::string> Catalog::in_group(VariableGroup g) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.group == g) out.push_back(e.name);
  }
  return out;
}

void SubjectTable::add(Record r) {
  Key key{r.subject, r.month, r.variable};
  auto [it, inserted] = records_.try_emplace(key, r);
  if (!inserted) {
    throw InputError("duplicate record (" + r.subject + ", " + std::to_string(r.month) + ", " + r.variable +
                     ") on lines " + std::to_string(it->second.line) + " and " + std::to_string(r.line));
  }
}

std::optional<double> SubjectTable::value(const std::string& subject, int month,
                                          const std::string& variable) const {
  auto it = records_.find(Key{subject, month, variable});
  if (it == records_.end()) return std::nullopt;
  return it->second.value;
}

bool SubjectTable::has_record(const std::string& subject, int month, const std::string& variable) const {
  return records_.count(Key{subject, month, variable}) > 0;
}

std::vector<std::string> SubjectTable::subjects() const {
  std::vector<std::string> out;
  for (const auto& [key, rec] : records_) {
    if (out.empty() || out.back() != std::get<0>(key)) out.push_back(std::get<0>(key));
  }
  return out;
}

int diagnosis_index(const std::string& label) {
  const auto& labels = diagnosis_labels();
  auto it = std::find(labels.begin(), labels.end(), trim(label));
  if (it == labels.end()) throw InputError("unknown diagnosis label '" + label + "'");
  return static_cast<int>(it - labels.begin());
}

SubjectTable parse_csv(std::istream& in, const Catalog& catalog, bool allow_extra) {
  SubjectTable table;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    const auto fail = [&](const std::string& what) {
      return InputError("line " + std::to_string(lineno) + ": " + what);
    };
    if (header) {
      header = false;
      if (fields.size() != 4 || trim(fields[0]) != "subject_id" || trim(fields[1]) != "month" ||
          trim(fields[2]) != "variable" || trim(fields[3]) != "value") {
        throw fail("expected header 'subject_id,month,variable,value'");
      }
      continue;
    }
    if (fields.size() != 4) throw fail("expected 4 fields, found " + std::to_string(fields.size()));
    Record r;
    r.line = lineno;
    r.subject = trim(fields[0]);
    if (r.subject.empty()) throw fail("empty subject_id");
    const auto month = parse_int(trim(fields[1]));
    if (!month) throw fail("month '" + fields[1] + "' is not an integer");
    r.month = *month;
    r.variable = trim(fields[2]);
    const auto group = catalog.group_of(r.variable);
    if (!group) {
      if (allow_extra) continue;
      throw fail("unknown variable '" + r.variable + "'");
    }
    const std::string text = trim(fields[3]);
    if (!text.empty()) {
      if (*group == VariableGroup::D) {
        const auto code = parse_int(text);
        if (code) {
          if (*code < 0 || *code >= static_cast<int>(diagnosis_labels().size())) {
            throw fail("diagnosis code out of range");
          }
          r.value = *code;
        } else {
          try {
            r.value = diagnosis_index(text);
          } catch (const InputError& e) {
            throw fail(e.what());
          }
        }
      } else {
        const auto v = parse_double(text);
        if (!v || !std::isfinite(*v)) throw fail("value '" + text + "' is not a finite number");
        r.value = *v;
      }
    }
    table.add(std::move(r));
  }
  if (header) throw InputError("CSV is empty (missing header)");
  return table;
}

SubjectTable load_csv(const std::filesystem::path& path, const Catalog& catalog, bool allow_extra) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return parse_csv(in, catalog, allow_extra);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& out, const SubjectTable& table, const Catalog& catalog) {
  out << "subject_id,month,variable,value\n";
  out << std::setprecision(17);
  for (const auto& [key, r] : table.records()) {
    out << r.subject << ',' << r.month << ',' << r.variable << ',';
    if (r.value) {
      if (catalog.group_of(r.variable) == VariableGroup::D) {
        out << diagnosis_labels()[static_cast<std::size_t>(*r.value)];
      } else {
        out << *r.value;
      }
    }
    out << '\n';
  }
}

ViewData encode_diagnosis(const std::vector<std::optional<std::string>>& labels) {
  const auto classes = static_cast<Eigen::Index>(diagnosis_labels().size());
  const auto n = static_cast<Eigen::Index>(labels.size());
  ViewData block{Matrix::Zero(n, classes), Mask::Constant(n, classes, false)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& label = labels[static_cast<std::size_t>(i)];
    if (!label) continue;
    block.values(i, diagnosis_index(*label)) = 1.0;
    block.mask.row(i).setConstant(true);
  }
  return block;
}

std::vector<std::optional<std::string>> decode_diagnosis(const ViewData& block) {
  std::vector<std::optional<std::string>> out;
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    if (!block.mask.row(i).all()) {
      out.emplace_back();
      continue;
    }
    Eigen::Index best = 0;
    block.values.row(i).maxCoeff(&best);
    out.emplace_back(diagnosis_labels()[static_cast<std::size_t>(best)]);
  }
  return out;
}

void WindowLayout::validate() const {
  if (visit_step < 1) throw InputError("layout: visit_step must be >= 1");
  if (lags.empty()) throw InputError("layout: no lags");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] >= 0) throw InputError("layout: lags must be negative month offsets");
    if (i > 0 && lags[i] <= lags[i - 1]) throw InputError("layout: lags must be strictly increasing");
  }
  if (train_targets.empty()) throw InputError("layout: no train targets");
  for (int t : train_targets) {
    if (t >= test_target) throw InputError("layout: train targets must precede the test target");
  }
  if (min_lead < 0) throw InputError("layout: min_lead must be >= 0");
  if (outputs.empty()) throw InputError("layout: at least one output view is required");
}

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int layout_int(const std::string& text, int line) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InputError("layout line " + std::to_string(line) + ": '" + text + "' is not an integer");
  }
  return v;
}

template <typename T>
void write_list(std::ostream& out, const char* key, const T& items) {
  out << key << " = ";
  bool first = true;
  for (const auto& x : items) {
    out << (first ? "" : ",") << x;
    first = false;
  }
  out << '\n';
}

}  // namespace

WindowLayout WindowLayout::parse(std::istream& in) {
  WindowLayout l;
  std::string raw;
  std::set<std::string> seen;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string text = trimmed(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InputError("layout line " + std::to_string(line) + ": expected key = value");
    const std::string key = trimmed(text.substr(0, eq));
    const std::string value = trimmed(text.substr(eq + 1));
    if (!seen.insert(key).second) throw InputError("layout line " + std::to_string(line) + ": duplicate key " + key);
    auto ints = [&] {
      std::vector<int> v;
      for (const auto& item : split_list(value)) v.push_back(layout_int(item, line));
      return v;
    };
    if (key == "visit_step") {
      l.visit_step = layout_int(value, line);
    } else if (key == "lags") {
      l.lags = ints();
    } else if (key == "train_targets") {
      l.train_targets = ints();
    } else if (key == "test_target") {
      l.test_target = layout_int(value, line);
    } else if (key == "min_lead") {
      l.min_lead = layout_int(value, line);
    } else if (key == "outputs") {
      l.outputs.clear();
      for (const auto& g : split_list(value)) l.outputs.push_back(parse_group(g));
    } else if (key == "inputs") {
      const auto vars = split_list(value);
      l.input_variables = std::set<std::string>(vars.begin(), vars.end());
    } else {
      throw InputError("layout line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  l.validate();
  return l;
}

WindowLayout WindowLayout::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open layout file '" + path.string() + "'");
  return parse(in);
}

void WindowLayout::write(std::ostream& out) const {
  out << "visit_step = " << visit_step << '\n';
  write_list(out, "lags", lags);
  write_list(out, "train_targets", train_targets);
  out << "test_target = " << test_target << '\n';
  out << "min_lead = " << min_lead << '\n';
  std::vector<std::string> groups;
  for (auto g : outputs) groups.push_back(to_string(g));
  write_list(out, "outputs", groups);
  if (input_variables) write_list(out, "inputs", *input_variables);
}

std::vector<ViewData> WindowedData::train() const {
  std::vector<ViewData> out;
  for (const auto& v : data) out.push_back({v.values.topRows(n_train), v.mask.topRows(n_train)});
  return out;
}

std::vector<ViewData> WindowedData::test() const {
  const Eigen::Index n_test = samples_count() - n_train;
  std::vector<ViewData> out;
  for (const auto& v : data) out.push_back({v.values.bottomRows(n_test), v.mask.bottomRows(n_test)});
  return out;
}

std::vector<ViewSpec> WindowedData::specs() const {
  std::vector<ViewSpec> out;
  for (const auto& v : views) out.push_back(v.spec);
  return out;
}

std::optional<std::size_t> WindowedData::output_view(VariableGroup g) const {
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].kind == WindowView::Kind::output && views[i].group == g) return i;
  }
  return std::nullopt;
}

ViewSpec default_view_spec(const WindowView& view, int view_id, int dim) {
  ViewSpec s;
  s.view_id = view_id;
  s.dim = dim;
  s.kind = view.class_index.front() >= 0 ? ViewKind::indicator : ViewKind::real;
  s.role = view.kind == WindowView::Kind::output ? ViewRole::output : ViewRole::input;
  s.feature_selection = view.kind == WindowView::Kind::ti || view.kind == WindowView::Kind::td_lag;
  if (s.kind == ViewKind::indicator) {
    s.learning_rate = LearningRate::inverse_iteration();
  } else if (view.kind == WindowView::Kind::output && view.group == VariableGroup::A) {
    s.learning_rate = LearningRate::constant_rate(1.0);
  } else {
    s.learning_rate = LearningRate::constant_rate(0.9);
  }
  switch (view.kind) {
    case WindowView::Kind::ti: s.name = "TI"; break;
    case WindowView::Kind::td_lag: s.name = "TD[t" + std::to_string(view.lag) + "]"; break;
    case WindowView::Kind::d_lag: s.name = "D[t" + std::to_string(view.lag) + "]"; break;
    case WindowView::Kind::output: s.name = std::string(to_string(view.group)) + "[t]"; break;
  }
  return s;
}

namespace {

bool wanted(const WindowLayout& layout, const std::string& variable) {
  return !layout.input_variables || layout.input_variables->count(variable) > 0;
}

void add_variable_columns(WindowView& v, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    v.variables.push_back(n);
    v.class_index.push_back(-1);
  }
}

void add_indicator_columns(WindowView& v, const std::string& name) {
  for (std::size_t c = 0; c < diagnosis_labels().size(); ++c) {
    v.variables.push_back(name);
    v.class_index.push_back(static_cast<int>(c));
  }
}

std::vector<WindowView> plan_views(const Catalog& catalog, const WindowLayout& layout) {
  std::vector<std::string> ti, lagged;
  for (const auto& n : catalog.in_group(VariableGroup::TI)) {
    if (wanted(layout, n)) ti.push_back(n);
  }
  for (auto g : {VariableGroup::TD, VariableGroup::V, VariableGroup::A}) {
    for (const auto& n : catalog.in_group(g)) {
      if (wanted(layout, n)) lagged.push_back(n);
    }
  }
  const auto dx = catalog.in_group(VariableGroup::D);
  const bool dx_input = !dx.empty() && wanted(layout, dx.front());

  std::vector<WindowView> views;
  if (!ti.empty()) {
    WindowView v;
    v.kind = WindowView::Kind::ti;
    add_variable_columns(v, ti);
    views.push_back(std::move(v));
  }
  if (!lagged.empty()) {
    for (int lag : layout.lags) {
      WindowView v;
      v.kind = WindowView::Kind::td_lag;
      v.lag = lag;
      add_variable_columns(v, lagged);
      views.push_back(std::move(v));
    }
  }
  if (dx_input) {
    for (int lag : layout.lags) {
      WindowView v;
      v.kind = WindowView::Kind::d_lag;
      v.lag = lag;
      add_indicator_columns(v, dx.front());
      views.push_back(std::move(v));
    }
  }
  for (auto g : layout.outputs) {
    const auto names = catalog.in_group(g);
    if (names.empty()) throw InputError(std::string("layout output ") + to_string(g) + " has no catalog variable");
    WindowView v;
    v.kind = WindowView::Kind::output;
    v.group = g;
    if (g == VariableGroup::D) {
      add_indicator_columns(v, names.front());
    } else if (g == VariableGroup::V || g == VariableGroup::A) {
      add_variable_columns(v, names);
    } else {
      throw InputError("layout outputs must be D, V or A");
    }
    views.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    views[i].spec = default_view_spec(views[i], static_cast<int>(i) + 1,
                                      static_cast<int>(views[i].variables.size()));
  }
  return views;
}

}  // namespace

WindowedData build_windows(const SubjectTable& table, const Catalog& catalog, const WindowLayout& layout) {
  layout.validate();
  for (const auto& [key, r] : table.records()) {
    if (!catalog.contains(r.variable)) throw InputError("table variable '" + r.variable + "' not in catalog");
  }
  WindowedData out;
  out.views = plan_views(catalog, layout);
  const auto subjects = table.subjects();
  for (const auto& s : subjects) {
    bool any = false;
    for (auto it = table.records().lower_bound({s, std::numeric_limits<int>::min(), ""});
         it != table.records().end() && std::get<0>(it->first) == s; ++it) {
      any = any || it->second.value.has_value();
    }
    if (!any) throw InputError("subject '" + s + "' has no observed values");
  }

  for (const auto& s : subjects) {
    for (std::size_t j = 0; j < layout.train_targets.size(); ++j) {
      out.samples.push_back({s, layout.train_targets[j], static_cast<int>(j) + 1, false});
    }
  }
  out.n_train = out.samples_count();
  for (const auto& s : subjects) out.samples.push_back({s, layout.test_target, 0, true});

  const Eigen::Index n = out.samples_count();
  const Eigen::Index n_test = n - out.n_train;
  const int last_input = layout.last_input_month();
  out.cell_month.resize(out.views.size());

  for (std::size_t m = 0; m < out.views.size(); ++m) {
    const auto& view = out.views[m];
    const auto dim = static_cast<Eigen::Index>(view.variables.size());
    ViewData data{Matrix::Zero(n, dim), Mask::Constant(n, dim, false)};
    ViewData truth{Matrix::Zero(n_test, dim), Mask::Constant(n_test, dim, false)};
    auto& months = out.cell_month[m];
    months.assign(static_cast<std::size_t>(n), std::nullopt);

    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& sample = out.samples[static_cast<std::size_t>(i)];
      std::optional<int> month;
      bool masked_target = false;
      switch (view.kind) {
        case WindowView::Kind::ti: month = 0; break;
        case WindowView::Kind::td_lag:
        case WindowView::Kind::d_lag: {
          const int mo = sample.target_month + view.lag;
          if (mo >= 0 && mo <= last_input) month = mo;
          break;
        }
        case WindowView::Kind::output:
          month = sample.target_month;
          masked_target = sample.is_test || sample.target_month > last_input;
          break;
      }
      months[static_cast<std::size_t>(i)] = month;
      if (!month) continue;

      for (Eigen::Index c = 0; c < dim; ++c) {
        const auto& var = view.variables[static_cast<std::size_t>(c)];
        std::optional<double> v;
        if (view.kind == WindowView::Kind::ti) {
          // Earliest observed value no later than the last usable input month.
          for (int mo = 0; mo <= last_input && !v; mo += layout.visit_step) v = table.value(sample.subject, mo, var);
        } else {
          v = table.value(sample.subject, *month, var);
        }
        if (!v) continue;
        const int cls = view.class_index[static_cast<std::size_t>(c)];
        const double x = cls >= 0 ? (static_cast<int>(*v) == cls ? 1.0 : 0.0) : *v;
        if (masked_target) {
          if (sample.is_test) {
            truth.values(i - out.n_train, c) = x;
            truth.mask(i - out.n_train, c) = true;
          }
          continue;
        }
        data.values(i, c) = x;
        data.mask(i, c) = true;
      }
    }
    out.data.push_back(std::move(data));
    out.test_truth.push_back(std::move(truth));
  }
  return out;
}

Standardizer fit_standardizer(const std::vector<ViewData>& views, const std::vector<ViewSpec>& specs,
                              Eigen::Index rows) {
  Standardizer s;
  for (std::size_t m = 0; m < views.size(); ++m) {
    const auto& v = views[m];
    const Eigen::Index dim = v.cols();
    Vector mean = Vector::Zero(dim);
    Vector scale = Vector::Ones(dim);
    if (specs[m].kind == ViewKind::real) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < rows; ++i) {
          if (v.mask(i, c)) {
            sum += v.values(i, c);
            ++count;
          }
        }
        if (count == 0) continue;
        const double mu = sum / static_cast<double>(count);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
          if (v.mask(i, c)) ss += (v.values(i, c) - mu) * (v.values(i, c) - mu);
        }
        mean(c) = mu;
        const double sd = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
        scale(c) = sd > 1e-12 * (1.0 + std::abs(mu)) ? sd : 1.0;
      }
    }
    s.mean.push_back(std::move(mean));
    s.scale.push_back(std::move(scale));
  }
  return s;
}

std::vector<ViewData> apply_standardizer(const Standardizer& s, std::vector<ViewData> views) {
  for (std::size_t m = 0; m < views.size(); ++m) {
    auto& v = views[m];
    Matrix scaled = (v.values.rowwise() - s.mean[m].transpose()).array().rowwise() / s.scale[m].transpose().array();
    v.values = v.mask.select(scaled, Matrix::Zero(v.rows(), v.cols()));
  }
  return views;
}

std::vector<ViewData> invert_standardizer(const Standardizer& s, std::vector<ViewData> views) {
  for (std::size_t m = 0; m < views.size(); ++m) {
    auto& v = views[m];
    Matrix restored = (v.values.array().rowwise() * s.scale[m].transpose().array()).rowwise() +
                      s.mean[m].transpose().array();
    v.values = v.mask.select(restored, Matrix::Zero(v.rows(), v.cols()));
  }
  return views;
}

}  // namespace latentline
