#include "latentline/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <istream>
#include <ostream>

namespace latentline {

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void flag(bool v) { u64(v ? 1 : 0); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void ints(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i64(x);
  }
  void strings(const std::vector<std::string>& v) {
    u64(v.size());
    for (const auto& s : v) str(s);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char b[8];
    in_.read(reinterpret_cast<char*>(b), 8);
    if (in_.gcount() != 8) throw InputError("model file is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  int i32() {
    const auto v = i64();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw InputError("model file: integer out of range");
    }
    return static_cast<int>(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool flag() {
    const auto v = u64();
    if (v > 1) throw InputError("model file: bad boolean");
    return v == 1;
  }
  std::size_t count(std::uint64_t limit = std::uint64_t{1} << 32) {
    const auto n = u64();
    if (n > limit) throw InputError("model file: implausible length");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(1 << 20), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (in_.gcount() != static_cast<std::streamsize>(s.size())) throw InputError("model file is truncated");
    return s;
  }
  Vector vec() {
    Vector v(static_cast<Eigen::Index>(count()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f64();
    return v;
  }
  Matrix mat() {
    const auto r = static_cast<Eigen::Index>(count());
    const auto c = static_cast<Eigen::Index>(count());
    if (r * c > (Eigen::Index{1} << 32)) throw InputError("model file: implausible matrix size");
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = f64();
    }
    return m;
  }
  std::vector<int> ints() {
    std::vector<int> v(count());
    for (auto& x : v) x = i32();
    return v;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(count());
    for (auto& s : v) s = str();
    return v;
  }

 private:
  std::istream& in_;
};

void write_gamma(Writer& w, const GammaPosterior& g) {
  w.vec(g.shape);
  w.vec(g.rate);
}

GammaPosterior read_gamma(Reader& r) {
  GammaPosterior g;
  g.shape = r.vec();
  g.rate = r.vec();
  return g;
}

void write_gaussian(Writer& w, const GaussianPosterior& g) {
  w.mat(g.mean);
  w.u64(g.covariances.size());
  for (const auto& c : g.covariances) w.mat(c);
}

GaussianPosterior read_gaussian(Reader& r) {
  GaussianPosterior g;
  g.mean = r.mat();
  g.covariances.resize(r.count());
  for (auto& c : g.covariances) c = r.mat();
  return g;
}

template <typename E>
E read_enum(Reader& r, int max) {
  const int v = r.i32();
  if (v < 0 || v > max) throw InputError("model file: bad enumeration value");
  return static_cast<E>(v);
}

void write_context(Writer& w, const ModelContext& c) {
  w.u64(c.catalog.entries().size());
  for (const auto& e : c.catalog.entries()) {
    w.str(e.name);
    w.i64(static_cast<int>(e.group));
  }
  const auto& l = c.layout;
  w.i64(l.visit_step);
  w.ints(l.lags);
  w.ints(l.train_targets);
  w.i64(l.test_target);
  w.i64(l.min_lead);
  w.flag(l.input_variables.has_value());
  if (l.input_variables) w.strings({l.input_variables->begin(), l.input_variables->end()});
  w.u64(l.outputs.size());
  for (auto g : l.outputs) w.i64(static_cast<int>(g));
  w.strings(c.subjects);
}

ModelContext read_context(Reader& r) {
  std::vector<Catalog::Entry> entries(r.count());
  for (auto& e : entries) {
    e.name = r.str();
    e.group = read_enum<VariableGroup>(r, static_cast<int>(VariableGroup::D));
  }
  ModelContext c;
  c.catalog = Catalog(std::move(entries));
  auto& l = c.layout;
  l.visit_step = r.i32();
  l.lags = r.ints();
  l.train_targets = r.ints();
  l.test_target = r.i32();
  l.min_lead = r.i32();
  if (r.flag()) {
    const auto vars = r.strings();
    l.input_variables = std::set<std::string>(vars.begin(), vars.end());
  }
  l.outputs.resize(r.count());
  for (auto& g : l.outputs) g = read_enum<VariableGroup>(r, static_cast<int>(VariableGroup::D));
  l.validate();
  c.subjects = r.strings();
  return c;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& model) {
  const ModelState& s = model.state;
  out.write(kModelMagic, sizeof kModelMagic);
  Writer w(out);
  w.u64(kModelVersion);

  const auto& h = s.hyper;
  for (double x : {h.a_alpha, h.b_alpha, h.a_tau, h.b_tau, h.a_gamma, h.b_gamma}) w.f64(x);
  w.i64(h.k_init);
  w.f64(h.prune_threshold);
  w.f64(h.elbo_rel_tol);
  w.i64(h.max_iter);
  w.u64(h.seed);

  w.u64(s.specs.size());
  for (const auto& spec : s.specs) {
    w.i64(spec.view_id);
    w.i64(spec.dim);
    w.i64(static_cast<int>(spec.kind));
    w.flag(spec.feature_selection);
    w.i64(static_cast<int>(spec.learning_rate.kind));
    w.f64(spec.learning_rate.rho);
    w.i64(static_cast<int>(spec.role));
    w.str(spec.name);
  }

  w.i64(s.k_current);
  w.i64(s.iteration);
  write_gaussian(w, s.z);
  for (const auto& v : s.views) {
    write_gaussian(w, v.w);
    write_gamma(w, v.alpha);
    write_gamma(w, v.tau);
    w.flag(v.gamma.has_value());
    if (v.gamma) write_gamma(w, *v.gamma);
    w.mat(v.missing.mean);
    w.f64(v.missing.variance);
    w.i64(v.missing.missing_count);
  }
  w.u64(s.elbo_trace.size());
  for (double e : s.elbo_trace) w.f64(e);

  w.flag(s.scaling.has_value());
  if (s.scaling) {
    w.u64(s.scaling->mean.size());
    for (std::size_t m = 0; m < s.scaling->mean.size(); ++m) {
      w.vec(s.scaling->mean[m]);
      w.vec(s.scaling->scale[m]);
    }
  }
  w.flag(model.context.has_value());
  if (model.context) write_context(w, *model.context);
  if (!out) throw InputError("failed to write model file");
}

ModelFile read_model(std::istream& in) {
  char magic[sizeof kModelMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw InputError("not a latentline model file (bad magic)");
  }
  Reader r(in);
  const auto version = r.u64();
  if (version != kModelVersion) throw InputError("unsupported model file version " + std::to_string(version));

  ModelFile file;
  ModelState& s = file.state;
  auto& h = s.hyper;
  for (double* x : {&h.a_alpha, &h.b_alpha, &h.a_tau, &h.b_tau, &h.a_gamma, &h.b_gamma}) *x = r.f64();
  h.k_init = r.i32();
  h.prune_threshold = r.f64();
  h.elbo_rel_tol = r.f64();
  h.max_iter = r.i32();
  h.seed = r.u64();

  s.specs.resize(r.count(1 << 16));
  for (auto& spec : s.specs) {
    spec.view_id = r.i32();
    spec.dim = r.i32();
    spec.kind = read_enum<ViewKind>(r, 1);
    spec.feature_selection = r.flag();
    spec.learning_rate.kind = read_enum<LearningRate::Kind>(r, 1);
    spec.learning_rate.rho = r.f64();
    spec.role = read_enum<ViewRole>(r, 1);
    spec.name = r.str();
  }

  s.k_current = r.i32();
  s.iteration = r.i32();
  s.z = read_gaussian(r);
  s.views.resize(s.specs.size());
  for (auto& v : s.views) {
    v.w = read_gaussian(r);
    v.alpha = read_gamma(r);
    v.tau = read_gamma(r);
    if (r.flag()) v.gamma = read_gamma(r);
    v.missing.mean = r.mat();
    v.missing.variance = r.f64();
    v.missing.missing_count = r.i64();
  }
  s.elbo_trace.resize(r.count());
  for (auto& e : s.elbo_trace) e = r.f64();

  if (r.flag()) {
    Standardizer st;
    const auto n = r.count(1 << 16);
    if (n != s.specs.size()) throw InputError("model file: scaling does not match the views");
    for (std::size_t m = 0; m < n; ++m) {
      st.mean.push_back(r.vec());
      st.scale.push_back(r.vec());
      if (st.mean.back().size() != s.specs[m].dim || st.scale.back().size() != s.specs[m].dim ||
          !(st.scale.back().array() > 0.0).all()) {
        throw InputError("model file: invalid scaling for view " + std::to_string(m + 1));
      }
    }
    s.scaling = std::move(st);
  }
  if (r.flag()) file.context = read_context(r);

  try {
    s.check_invariants();
  } catch (const std::logic_error& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write_model(out, model);
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path.string() + "'");
  return read_model(in);
}

}  // namespace latentline
