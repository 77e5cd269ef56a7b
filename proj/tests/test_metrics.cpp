#include <doctest.h>

#include "latentline/metrics.hpp"
#include "support.hpp"

#include <random>

using namespace latentline;

TEST_CASE("mae") {
  std::vector<double> a = {1, 2, 3};
  CHECK(mae(a, a) == 0.0);
  std::vector<double> t = {0, 4}, p = {1, 1};
  CHECK(mae(t, p) == 2.0);
  std::vector<double> shifted_t = {7.5, 11.5}, shifted_p = {8.5, 8.5};
  CHECK(mae(shifted_t, shifted_p) == mae(t, p));
  CHECK_THROWS_AS(mae(a, p), InputError);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), InputError);
}

TEST_CASE("auc") {
  std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  std::vector<bool> y = {false, false, true, true};
  CHECK(auc_one_vs_rest(s, y) == 0.75);
  CHECK(auc_one_vs_rest(std::vector<double>{0.1, 0.2, 0.9}, {false, false, true}) == 1.0);
  CHECK(auc_one_vs_rest(std::vector<double>{0.3, 0.3, 0.3, 0.3}, {false, true, false, true}) == 0.5);
  CHECK_THROWS_AS(auc_one_vs_rest(std::vector<double>{0.1, 0.2}, {true, true}), InputError);
}

TEST_CASE("auc is invariant under increasing maps") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 4 + static_cast<int>(rng() % 16);
    std::vector<double> s(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
    std::vector<bool> y(static_cast<std::size_t>(n));
    const double a = 0.1 + std::abs(u(rng)), b = u(rng);
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = std::round(u(rng) * 3.0) / 3.0;
      m[static_cast<std::size_t>(i)] = std::exp(a * s[static_cast<std::size_t>(i)] + b) + std::pow(s[static_cast<std::size_t>(i)], 3);
      y[static_cast<std::size_t>(i)] = i % 2 == 0;
    }
    CHECK(auc_one_vs_rest(s, y) == auc_one_vs_rest(m, y));
  }
}

TEST_CASE("mauc") {
  Matrix perfect{{0.9, 0.1, 0.0}, {0.1, 0.8, 0.1}, {0.0, 0.2, 0.8}, {0.7, 0.2, 0.1}};
  std::vector<int> labels = {0, 1, 2, 0};
  CHECK(mauc(perfect, labels) == 1.0);
  CHECK(mauc(Matrix::Constant(4, 3, 0.3), labels) == 0.5);

  Matrix six{{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.4, 0.4, 0.2}, {0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}, {0.6, 0.1, 0.3}};
  std::vector<int> six_labels = {0, 1, 1, 2, 0, 2};
  const double expected = testsupport::pair_mauc(six, six_labels, true);
  CHECK(std::abs(mauc(six, six_labels) - expected) <= 1e-12);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const int n = 4 + static_cast<int>(rng() % 10);
    Matrix two(n, 2);
    std::vector<int> y(static_cast<std::size_t>(n));
    std::vector<double> pos(static_cast<std::size_t>(n));
    std::vector<bool> is_pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      two(i, 1) = u(rng);
      two(i, 0) = 1.0 - two(i, 1);
      y[static_cast<std::size_t>(i)] = i < 2 ? i : static_cast<int>(rng() % 2);
      pos[static_cast<std::size_t>(i)] = two(i, 1);
      is_pos[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] == 1;
    }
    CHECK(std::abs(mauc(two, y) - auc_one_vs_rest(pos, is_pos)) <= 1e-12);
  }
  CHECK_THROWS_AS(mauc(perfect, std::vector<int>{0, 1, 1, 0}), InputError);
}

TEST_CASE("balanced accuracy") {
  std::vector<int> t = {0, 1, 2, 1};
  CHECK(balanced_accuracy(t, t) == 1.0);
  CHECK(balanced_accuracy(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 0, 1}) == 0.5);
  CHECK(balanced_accuracy(std::vector<int>{0, 1, 0, 0}, std::vector<int>{0, 1, 1, 2}) == 0.5);
}

TEST_CASE("metrics match brute force") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) CHECK(testsupport::metric_instance_deviation(seed) <= 1e-12);
}
