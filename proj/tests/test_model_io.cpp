#include <doctest.h>

#include "latentline/model_io.hpp"
#include "latentline/predict.hpp"
#include "latentline/synth.hpp"
#include "latentline/vi.hpp"

#include <cstring>
#include <numeric>
#include <sstream>

using namespace latentline;

namespace {

ModelFile fitted_model(std::uint64_t seed) {
  SynthConfig c;
  c.n_subjects = 60;
  c.seed = seed;
  c.missing = {MissingMechanism::Kind::mcar, 0.2};
  auto syn = generate(c);
  syn.specs[1].feature_selection = true;
  syn.specs[2].kind = ViewKind::real;
  FitOptions o;
  o.hyper.k_init = 6;
  o.hyper.max_iter = 200;
  ModelFile m;
  m.state = fit(syn.validated(), o).state;
  return m;
}

std::string serialize(const ModelFile& m) {
  std::ostringstream out;
  write_model(out, m);
  return out.str();
}

ModelFile parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_model(in);
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("model round trip predicts bit-identically") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto m = fitted_model(seed);
    auto back = parse(serialize(m));
    CHECK(serialize(back) == serialize(m));
    CHECK(back.state.elbo_trace == m.state.elbo_trace);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(m.state.samples()));
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t v = 0; v < m.state.views.size(); ++v) {
      auto a = predict_view(m.state, rows, v);
      auto b = predict_view(back.state, rows, v);
      CHECK(same_bits(a.mean, b.mean));
      CHECK(same_bits(a.variance, b.variance));
    }
  }
}

TEST_CASE("context and scaling survive the round trip") {
  auto m = fitted_model(4);
  Standardizer s;
  for (const auto& v : m.state.views) {
    s.mean.push_back(Vector::Constant(v.w.mean.rows(), 0.5));
    s.scale.push_back(Vector::Constant(v.w.mean.rows(), 2.0));
  }
  m.state.scaling = s;
  m.context = ModelContext{Catalog::default_catalog(), WindowLayout{}, {"a", "b"}};
  auto back = parse(serialize(m));
  REQUIRE(back.context.has_value());
  CHECK(back.context->subjects == std::vector<std::string>{"a", "b"});
  CHECK(back.context->layout.test_target == m.context->layout.test_target);
  REQUIRE(back.state.scaling.has_value());
  CHECK(back.state.scaling->scale[0](0) == 2.0);
}

TEST_CASE("corrupt model files are input errors") {
  const auto good = serialize(fitted_model(5));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse(bad_magic), InputError);
  auto bad_version = good;
  bad_version[8] = 99;
  CHECK_THROWS_AS(parse(bad_version), InputError);
  for (std::size_t cut : {std::size_t{4}, std::size_t{12}, good.size() / 2, good.size() - 1})
    CHECK_THROWS_AS(parse(good.substr(0, cut)), InputError);
  CHECK_THROWS_AS(parse(""), InputError);

  auto broken = fitted_model(6);
  broken.state.views[0].tau.rate(0) = -1.0;
  std::ostringstream out;
  write_model(out, broken);
  CHECK_THROWS_AS(parse(out.str()), InputError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.bin"), InputError);
}
