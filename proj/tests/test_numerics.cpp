#include <doctest.h>

#include <cmath>

#include "adco/errors.hpp"
#include "adco/numerics.hpp"
#include "adco/rng.hpp"
#include "test_support.hpp"

using namespace adco;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("l2_normalize basic cases") {
  const std::vector<double> v{3.0, 4.0};
  const auto unit = l2_normalize(v);
  CHECK(unit[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(unit[1] == doctest::Approx(0.8).epsilon(1e-12));

  const std::vector<double> e1{1.0, 0.0, 0.0};
  const auto same = l2_normalize(e1);
  CHECK(same == e1);

  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(l2_normalize(zero), DegenerateVector);
}

TEST_CASE("l2_normalize is idempotent and unit for random vectors") {
  SeededRng rng(7);
  for (int t = 0; t < 200; ++t) {
    SeededRng inst = rng.child(t);
    std::vector<double> v(5);
    for (double& x : v) x = 10.0 * inst.next_gaussian();
    if (norm(v) < 1e-12) continue;
    const auto once = l2_normalize(v);
    CHECK(std::abs(norm(once) - 1.0) <= 1e-12);
    const auto twice = l2_normalize(once);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(std::abs(twice[i] - once[i]) <= 1e-15);
  }
}

TEST_CASE("softmax_temp basic cases") {
  const std::vector<double> equal{2.5, 2.5, 2.5};
  for (double tau : {0.02, 1.0, 10.0}) {
    const auto p = softmax_temp(equal, tau);
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  const std::vector<double> ratio{0.0, std::log(2.0)};
  const auto p = softmax_temp(ratio, 1.0);
  CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // exp(50) dominance at low temperature
  const std::vector<double> sharp{1.0, 0.0};
  const auto q = softmax_temp(sharp, 0.02);
  CHECK(q[0] >= 1.0 - 1e-12);

  CHECK_THROWS_AS(softmax_temp(sharp, 0.0), InvalidTemperature);
  CHECK_THROWS_AS(softmax_temp(sharp, -1.0), InvalidTemperature);
}

TEST_CASE("softmax_temp sums to one and ignores constant shifts") {
  SeededRng rng(11);
  for (int t = 0; t < 1000; ++t) {
    SeededRng inst = rng.child(t);
    const std::size_t n = 2 + inst.next_u64() % 8;
    const double tau = inst.next_uniform(0.01, 10.0);
    std::vector<double> scores(n);
    for (double& s : scores) s = inst.next_uniform(-3.0, 3.0);

    const auto p = softmax_temp(scores, tau);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    const double shift = inst.next_uniform(-5.0, 5.0);
    std::vector<double> shifted = scores;
    for (double& s : shifted) s += shift;
    const auto q = softmax_temp(shifted, tau);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("finite_diff_grad on simple functions") {
  const auto square = [](std::span<const double> x) { return x[0] * x[0]; };
  const std::vector<double> x{3.0};
  const auto g = finite_diff_grad(square, x);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

  const auto constant = [](std::span<const double>) { return 4.2; };
  const std::vector<double> x3{1.0, -2.0, 0.5};
  for (double gi : finite_diff_grad(constant, x3)) CHECK(gi == doctest::Approx(0.0));

  const auto bad = [](std::span<const double> v) { return std::log(v[0]); };
  const std::vector<double> neg{-1.0};
  CHECK_THROWS_AS(finite_diff_grad(bad, neg), OracleEvaluationError);
}

TEST_CASE("finite_diff_grad matches analytic derivatives of cubics") {
  // f(x) = sum_i a_i x_i^3 + b_i x_i^2 + c_i x_i
  SeededRng rng(13);
  for (int t = 0; t < 20; ++t) {
    SeededRng inst = rng.child(t);
    const std::size_t n = 4;
    std::vector<double> a(n), b(n), c(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = inst.next_uniform(-2.0, 2.0);
      b[i] = inst.next_uniform(-2.0, 2.0);
      c[i] = inst.next_uniform(-2.0, 2.0);
      x[i] = inst.next_uniform(-1.5, 1.5);
    }
    const auto f = [&](std::span<const double> v) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += a[i] * v[i] * v[i] * v[i] + b[i] * v[i] * v[i] + c[i] * v[i];
      return s;
    };
    const auto g = finite_diff_grad(f, x, 1e-5);
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = 3.0 * a[i] * x[i] * x[i] + 2.0 * b[i] * x[i] + c[i];
      CHECK(std::abs(g[i] - exact) <= 1e-6);
    }
  }
}

TEST_CASE("matrix products agree with a naive triple loop") {
  SeededRng rng(17);
  Matrix a(3, 4), b(4, 5);
  for (double& v : a.flat()) v = rng.next_gaussian();
  for (double& v : b.flat()) v = rng.next_gaussian();
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
    }

  Matrix bt(5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) bt.at(i, j) = b.at(j, i);
  CHECK(matmul_nt(a, bt) == c);

  Matrix at(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) at.at(i, j) = a.at(j, i);
  const Matrix c2 = matmul_tn(at, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(c2.at(i, j) == doctest::Approx(c.at(i, j)).epsilon(1e-12));

  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("seeded rng is reproducible and children are independent") {
  SeededRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // child streams do not depend on parent draw position
  SeededRng parent(5);
  const SeededRng child_before = parent.child(2);
  parent.next_u64();
  parent.next_u64();
  SeededRng child_after = parent.child(2);
  SeededRng c0 = child_before;
  for (int i = 0; i < 10; ++i) CHECK(c0.next_u64() == child_after.next_u64());

  // distinct indices give distinct streams
  SeededRng c1 = parent.child(0), c2 = parent.child(1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += c1.next_u64() == c2.next_u64();
  CHECK(same == 0);
}

TEST_CASE("rng uniform and gaussian moments are sane") {
  SeededRng rng(99);
  double sum = 0.0, sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sumsq / n - 1.0) < 0.05);
}

TEST_SUITE_END();
