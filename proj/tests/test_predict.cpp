#include <doctest.h>

#include "latentline/bench.hpp"
#include "latentline/predict.hpp"
#include "latentline/synth.hpp"
#include "latentline/vi.hpp"

#include <numeric>
#include <random>

using namespace latentline;

namespace {

ModelState point_mass_state(double z, const std::vector<double>& w) {
  ViewSpec spec;
  spec.dim = static_cast<int>(w.size());
  auto data = validate_dataset({spec}, {ViewData::fully_observed(Matrix::Zero(1, spec.dim))});
  Hyperparameters h;
  h.k_init = 1;
  auto s = init_state(data, h, 0);
  s.z.mean(0, 0) = z;
  s.z.covariances = {Matrix::Zero(1, 1)};
  for (std::size_t d = 0; d < w.size(); ++d) s.views[0].w.mean(static_cast<Eigen::Index>(d), 0) = w[d];
  s.views[0].w.covariances = {Matrix::Zero(1, 1)};
  s.views[0].tau = GammaPosterior::prior(1, 1e6, 1.0);
  return s;
}

}  // namespace

TEST_CASE("predict_view point masses") {
  auto s = point_mass_state(2.0, {1.0, -1.0});
  const Eigen::Index rows[] = {0};
  auto p = predict_view(s, rows, 0);
  CHECK(p.mean(0, 0) == 2.0);
  CHECK(p.mean(0, 1) == -2.0);
  CHECK(p.variance(0, 0) == doctest::Approx(1e-6).epsilon(1e-12));

  s.z.mean(0, 0) = 0.0;
  s.scaling = Standardizer{{Vector{{5.0, -3.0}}}, {Vector{{2.0, 4.0}}}};
  p = predict_view(s, rows, 0);
  CHECK(p.mean(0, 0) == 5.0);
  CHECK(p.mean(0, 1) == -3.0);
  CHECK(p.variance(0, 1) == doctest::Approx(16e-6).epsilon(1e-12));
  const Eigen::Index bad[] = {3};
  CHECK_THROWS_AS(predict_view(s, bad, 0), InputError);
  CHECK_THROWS_AS(predict_view(s, rows, 4), InputError);
}

TEST_CASE("scores_from_means") {
  auto a = scores_from_means(Matrix{{0.1, 0.7, 0.2}});
  CHECK(a.labels[0] == 1);
  CHECK(a.scores(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
  auto tie = scores_from_means(Matrix{{0.5, 0.5, 0.0}});
  CHECK(tie.labels[0] == 0);
  auto clipped = scores_from_means(Matrix{{-0.2, 0.3, 0.1}});
  CHECK(clipped.scores(0, 0) == 0.0);
  CHECK(clipped.scores(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(clipped.scores(0, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(clipped.labels[0] == 1);
  auto none = scores_from_means(Matrix{{-1.0, -2.0, 0.0}});
  CHECK(none.scores.row(0).isApproxToConstant(1.0 / 3.0));
  CHECK(none.labels[0] == 2);
  auto over = scores_from_means(Matrix{{1.1, 1.2, 0.0}});
  CHECK(over.labels[0] == 1);
}

TEST_CASE("classify argmax ignores positive rescaling") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 1.2);
  std::uniform_real_distribution<double> scale(0.01, 0.9);
  for (int t = 0; t < 500; ++t) {
    Matrix m = Matrix::NullaryExpr(1, 3, [&] { return u(rng); });
    const double c = scale(rng);
    CHECK(scores_from_means(m).labels == scores_from_means(c * m).labels);
  }
}

TEST_CASE("feature relevance") {
  ViewSpec spec;
  spec.dim = 2;
  spec.feature_selection = true;
  auto data = validate_dataset({spec}, {ViewData::fully_observed(Matrix::Ones(3, 2))});
  Hyperparameters h;
  h.k_init = 1;
  auto s = init_state(data, h, 0);
  s.views[0].gamma = GammaPosterior{Vector{{2.0, 4.0}}, Vector{{1.0, 1.0}}};
  auto raw = feature_relevance(s, 0);
  CHECK(raw.scores(0) == 0.5);
  CHECK(raw.scores(1) == 0.25);
  auto unit = feature_relevance(s, 0, Normalization::unit_sum);
  CHECK(unit.scores(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(unit.scores.sum() - 1.0) <= 1e-12);
  s.views[0].gamma = GammaPosterior{Vector{{3.0, 3.0}}, Vector{{2.0, 2.0}}};
  CHECK(feature_relevance(s, 0, Normalization::unit_sum).scores.isApproxToConstant(0.5));

  spec.feature_selection = false;
  auto plain = init_state(validate_dataset({spec}, {ViewData::fully_observed(Matrix::Ones(3, 2))}), h, 0);
  CHECK_THROWS_AS(feature_relevance(plain, 0), InputError);
  CHECK(loading_row_norms(plain, 0).size() == 2);
}

TEST_CASE("relevance separates signal features from noise") {
  SynthConfig c;
  c.n_subjects = 300;
  c.view_dims = {8, 6};
  c.relevant_features = {{0, 1}, {0, 1, 2, 3, 4, 5}};
  c.k_true = 2;
  c.noise_precision = {10.0, 10.0};
  c.seed = 1;
  auto syn = generate(c);
  syn.specs[0].feature_selection = true;
  FitOptions o;
  o.hyper.k_init = 6;
  auto s = fit(syn.validated(), o).state;
  auto r = feature_relevance(s, 0, Normalization::unit_sum).scores;
  CHECK(r.head(2).mean() > r.tail(6).mean());
}

TEST_CASE("factor activity") {
  std::vector<double> w = {1e-7, 0.0};
  auto s = point_mass_state(1.0, w);
  auto a = factor_activity(s);
  CHECK(a.threshold == s.hyper.prune_threshold);
  CHECK(!a.matrix(0, 0));
  CHECK(factor_activity(s, 0.0).matrix(0, 0));
}

TEST_CASE("a view-private factor is active only in its view") {
  SynthConfig c;
  c.n_subjects = 400;
  c.k_true = 3;
  c.view_dims = {8, 8};
  c.active_factors = {{0, 1}, {0, 2}};
  c.noise_precision = {20.0, 20.0};
  c.seed = 3;
  auto syn = generate(c);
  FitOptions o;
  o.hyper.k_init = 8;
  auto s = fit(syn.validated(), o).state;
  auto a = factor_activity(s, 0.1);
  int private_first = 0, private_second = 0, shared = 0;
  for (Eigen::Index k = 0; k < s.k_current; ++k) {
    const bool first = a.matrix(0, k), second = a.matrix(1, k);
    private_first += first && !second;
    private_second += second && !first;
    shared += first && second;
  }
  CHECK(private_first >= 1);
  CHECK(private_second >= 1);
  CHECK(shared >= 1);

  auto pruned = s;
  prune_factors(pruned);
  auto after = factor_activity(pruned);
  for (Eigen::Index k = 0; k < pruned.k_current; ++k) CHECK(after.matrix.col(k).any());
}

TEST_CASE("noiseless converged fit reproduces observations") {
  SynthConfig c;
  c.n_subjects = 200;
  c.noise_precision = {1e8, 1e8, 1e8};
  c.seed = 5;
  auto syn = generate(c);
  FitOptions o;
  o.hyper.k_init = 8;
  o.hyper.elbo_rel_tol = 1e-9;
  auto s = fit(syn.validated(), o).state;
  std::vector<Eigen::Index> rows(20);
  std::iota(rows.begin(), rows.end(), 0);
  int bad = 0, total = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    auto p = predict_view(s, rows, m);
    for (Eigen::Index i = 0; i < 20; ++i) {
      for (Eigen::Index d = 0; d < p.mean.cols(); ++d) {
        const double x = syn.views[m].values(i, d);
        if (std::abs(x) < 0.1) continue;
        ++total;
        bad += std::abs(p.mean(i, d) - x) > 0.05 * std::abs(x);
      }
    }
  }
  CHECK(total > 100);
  CHECK(bad == 0);
}

TEST_CASE("imputed cells are calibrated and observed cells pass through") {
  CohortConfig c;
  c.n_subjects = 60;
  c.seed = 2;
  auto cohort = generate_cohort(c);
  auto w = build_windows(cohort.table, cohort.catalog, WindowLayout{});
  FitOptions o;
  o.hyper.k_init = 10;
  auto fitted = fit_windows(w, o).state;
  auto cells = estimate_cells(fitted, w, cohort.table, cohort.catalog);
  int inside = 0, imputed = 0;
  for (const auto& [key, e] : cells) {
    const auto& [subject, month, variable] = key;
    if (e.source == CellSource::observed) {
      CHECK(e.value == *cohort.table.value(subject, month, variable));
      CHECK(e.variance == 0.0);
      continue;
    }
    if (cohort.catalog.group_of(variable) == VariableGroup::D) continue;
    const auto truth = cohort.complete.value(subject, month, variable);
    if (!truth) continue;
    ++imputed;
    inside += std::abs(e.value - *truth) <= 2.0 * std::sqrt(e.variance);
  }
  REQUIRE(imputed > 200);
  CHECK(inside >= 0.9 * imputed);

  const auto subject = cohort.table.subjects().front();
  auto traj = subject_trajectory(fitted, w, cohort.table, cohort.catalog, subject, cohort.catalog.in_group(VariableGroup::V).front());
  CHECK(!traj.empty());
  for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj[i].month > traj[i - 1].month);
  CHECK_THROWS_AS(subject_trajectory(fitted, w, cohort.table, cohort.catalog, "nobody", "Ventricles"), InputError);
  CHECK_THROWS_AS(subject_trajectory(fitted, w, cohort.table, cohort.catalog, subject, "Nope"), InputError);
}
