#include <doctest.h>

#include <cmath>

#include "adco/contrast.hpp"
#include "adco/errors.hpp"
#include "adco/numerics.hpp"
#include "test_support.hpp"

using namespace adco;
using test::from_vector;
using test::naive_info_nce_loss;
using test::random_unit_rows;
using test::to_vector;

TEST_SUITE_BEGIN("contrast");

TEST_CASE("info_nce closed-form single pair") {
  // q = q' so q.q' = 1; one orthogonal negative; tau = 1:
  // loss = -log(e / (e + 1)) = log(1 + 1/e)
  const Matrix q = Matrix::from_rows({{1.0, 0.0}});
  const Matrix n = Matrix::from_rows({{0.0, 1.0}});
  const ContrastResult res = info_nce(q, q, n, 1.0);
  CHECK(res.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(res.pos_prob[0] + res.neg_prob.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("info_nce with an empty bank is zero") {
  const Matrix q = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const Matrix empty(0, 2);
  const ContrastResult res = info_nce(q, q, empty, 0.12);
  CHECK(res.loss == doctest::Approx(0.0));
  CHECK(res.pos_prob[0] == doctest::Approx(1.0));
  CHECK(res.neg_prob.cols() == 0);
}

TEST_CASE("info_nce matches the naive brute-force evaluation") {
  SeededRng rng(101);
  for (int t = 0; t < 50; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(4, 6, inst);
    const Matrix keys = random_unit_rows(4, 6, inst);
    const Matrix bank = random_unit_rows(8, 6, inst);
    const double tau = t % 2 == 0 ? 1.0 : 0.5;
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    CHECK(res.loss ==
          doctest::Approx(naive_info_nce_loss(queries, keys, bank, tau)).epsilon(1e-12));
  }
}

TEST_CASE("info_nce input validation") {
  const Matrix q = Matrix::from_rows({{1.0, 0.0}});
  const Matrix two = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const Matrix bank = Matrix::from_rows({{0.0, 1.0}});
  CHECK_THROWS_AS(info_nce(q, two, bank, 1.0), ShapeError);
  CHECK_THROWS_AS(info_nce(q, q, bank, 0.0), InvalidTemperature);

  const Matrix off = Matrix::from_rows({{1.1, 0.0}});
  CHECK_THROWS_AS(info_nce(off, q, bank, 1.0), NormalizationError);
  CHECK_NOTHROW(info_nce(off, q, bank, 1.0, NormCheck::off));
}

TEST_CASE("probability closure holds on random instances") {
  SeededRng rng(102);
  for (int t = 0; t < 1000; ++t) {
    SeededRng inst = rng.child(t);
    const std::size_t n = 1 + inst.next_u64() % 6;
    const std::size_t k = inst.next_u64() % 9;
    const Matrix queries = random_unit_rows(n, 5, inst);
    const Matrix keys = random_unit_rows(n, 5, inst);
    const Matrix bank = random_unit_rows(k == 0 ? 0 : k, 5, inst);
    const double tau = inst.next_uniform(0.02, 2.0);
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    for (std::size_t i = 0; i < n; ++i) {
      double total = res.pos_prob[i];
      for (std::size_t j = 0; j < res.neg_prob.cols(); ++j) {
        const double p = res.neg_prob.at(i, j);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("adversary_grad single-query example") {
  // q = e1, key = e2 (q.key = 0), negative n = e1, tau = 1:
  // p(n|q) = e/(e+1), gradient row = p(n|q) * q
  const Matrix q = Matrix::from_rows({{1.0, 0.0}});
  const Matrix key = Matrix::from_rows({{0.0, 1.0}});
  const Matrix n = Matrix::from_rows({{1.0, 0.0}});
  const ContrastResult res = info_nce(q, key, n, 1.0);
  const double p = std::exp(1.0) / (std::exp(1.0) + 1.0);
  CHECK(res.neg_prob.at(0, 0) == doctest::Approx(p).epsilon(1e-12));
  const Matrix grad = adversary_grad(res, q);
  CHECK(grad.at(0, 0) == doctest::Approx(p).epsilon(1e-12));
  CHECK(grad.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("adversary_grad row norms respect the probability bound") {
  SeededRng rng(103);
  for (int t = 0; t < 50; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(6, 5, inst);
    const Matrix keys = random_unit_rows(6, 5, inst);
    const Matrix bank = random_unit_rows(10, 5, inst);
    const double tau = inst.next_uniform(0.05, 1.0);
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const Matrix grad = adversary_grad(res, queries);
    for (std::size_t k = 0; k < bank.rows(); ++k) {
      double mass = 0.0;
      for (std::size_t i = 0; i < queries.rows(); ++i) mass += res.neg_prob.at(i, k);
      const double bound = mass / (static_cast<double>(queries.rows()) * tau);
      CHECK(norm(grad.row(k)) <= bound + 1e-12);
    }
  }
}

TEST_CASE("adversary_grad matches finite differences across temperatures") {
  const double taus[] = {0.02, 0.12, 1.0};
  SeededRng rng(104);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix keys = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = taus[t % 3];
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const Matrix analytic = adversary_grad(res, queries);
    const auto f = [&](std::span<const double> flat) {
      return info_nce(queries, keys, from_vector({flat.begin(), flat.end()}, 16, 8), tau,
                      NormCheck::off)
          .loss;
    };
    const auto numeric = finite_diff_grad(f, to_vector(bank));
    worst = std::max(worst, max_grad_error(to_vector(analytic), numeric));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("query_grad in the confident regime vanishes") {
  // q = key exactly and far-away negatives at low tau: p(key|q) -> 1
  const Matrix q = Matrix::from_rows({{1.0, 0.0}});
  const Matrix n = Matrix::from_rows({{-1.0, 0.0}});
  const ContrastResult res = info_nce(q, q, n, 0.02);
  const QueryKeyGrads g = query_grad(res, q, q, n);
  for (double v : g.d_queries.flat()) CHECK(std::abs(v) < 1e-12);
  for (double v : g.d_keys.flat()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("key gradient is antiparallel to the query") {
  SeededRng rng(105);
  for (int t = 0; t < 20; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(4, 6, inst);
    const Matrix keys = random_unit_rows(4, 6, inst);
    const Matrix bank = random_unit_rows(5, 6, inst);
    const double tau = 0.3;
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const QueryKeyGrads g = query_grad(res, queries, keys, bank);
    for (std::size_t i = 0; i < queries.rows(); ++i) {
      const double expected_mag =
          (1.0 - res.pos_prob[i]) / (static_cast<double>(queries.rows()) * tau);
      // row = -expected_mag * q_i
      for (std::size_t c = 0; c < queries.cols(); ++c)
        CHECK(g.d_keys.at(i, c) ==
              doctest::Approx(-expected_mag * queries.at(i, c)).epsilon(1e-10));
    }
  }
}

TEST_CASE("query and key gradients match finite differences") {
  const double taus[] = {0.02, 0.12, 1.0};
  SeededRng rng(106);
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix keys = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = taus[t % 3];
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const QueryKeyGrads analytic = query_grad(res, queries, keys, bank);

    const auto f_q = [&](std::span<const double> flat) {
      return info_nce(from_vector({flat.begin(), flat.end()}, 8, 8), keys, bank, tau,
                      NormCheck::off)
          .loss;
    };
    const auto f_k = [&](std::span<const double> flat) {
      return info_nce(queries, from_vector({flat.begin(), flat.end()}, 8, 8), bank, tau,
                      NormCheck::off)
          .loss;
    };
    worst = std::max(worst, max_grad_error(to_vector(analytic.d_queries),
                                           finite_diff_grad(f_q, to_vector(queries))));
    worst = std::max(worst, max_grad_error(to_vector(analytic.d_keys),
                                           finite_diff_grad(f_k, to_vector(keys))));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("alt loss degenerate and uniform cases") {
  SeededRng rng(107);
  // single query: p(q|n_k) = 1 and J = sum_k q.n_k
  const Matrix q = random_unit_rows(1, 4, rng);
  const Matrix bank = random_unit_rows(6, 4, rng);
  const AltLossResult res = alt_loss_j(q, bank, 0.37);
  double expected = 0.0;
  for (std::size_t k = 0; k < bank.rows(); ++k) {
    CHECK(res.probs.at(0, k) == doctest::Approx(1.0).epsilon(1e-12));
    expected += dot(q.row(0), bank.row(k));
  }
  CHECK(res.value == doctest::Approx(expected).epsilon(1e-9));

  // equal similarities: p = 1/N per column (orthogonal construction, sim 0)
  const Matrix queries = Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}});
  const Matrix negs = Matrix::from_rows({{0, 0, 0, 1}});
  const AltLossResult uniform = alt_loss_j(queries, negs, 0.5);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(uniform.probs.at(i, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("alt loss columns are normalized and the gradient is the analytic one") {
  SeededRng rng(108);
  const double taus[] = {0.02, 0.12, 1.0};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(8, 8, inst);
    const Matrix bank = random_unit_rows(16, 8, inst);
    const double tau = taus[t % 3];
    const AltLossResult res = alt_loss_j(queries, bank, tau);
    for (std::size_t k = 0; k < bank.rows(); ++k) {
      double col = 0.0;
      for (std::size_t i = 0; i < queries.rows(); ++i) col += res.probs.at(i, k);
      CHECK(std::abs(col - 1.0) <= 1e-12);
    }
    const Matrix analytic = alt_loss_grad(res.probs, queries);
    const auto f = [&](std::span<const double> flat) {
      return alt_loss_j(queries, from_vector({flat.begin(), flat.end()}, 16, 8), tau,
                        NormCheck::off)
          .value;
    };
    worst = std::max(worst,
                     max_grad_error(to_vector(analytic), finite_diff_grad(f, to_vector(bank))));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("alt_loss_grad special cases and validation") {
  const Matrix queries = Matrix::from_rows({{1, 0}, {0, 1}});

  Matrix mass_on_second(2, 1);
  mass_on_second.at(0, 0) = 0.0;
  mass_on_second.at(1, 0) = 1.0;
  const Matrix g1 = alt_loss_grad(mass_on_second, queries);
  CHECK(g1.at(0, 0) == doctest::Approx(0.0));
  CHECK(g1.at(0, 1) == doctest::Approx(1.0));

  Matrix uniform(2, 1, 0.5);
  const Matrix g2 = alt_loss_grad(uniform, queries);
  CHECK(g2.at(0, 0) == doctest::Approx(0.5));
  CHECK(g2.at(0, 1) == doctest::Approx(0.5));

  Matrix bad(2, 1, 0.6);
  CHECK_THROWS_AS(alt_loss_grad(bad, queries), ProbabilityError);
}

TEST_CASE("symmetric loss properties") {
  SeededRng rng(109);
  const Matrix a = random_unit_rows(5, 6, rng);
  const Matrix b = random_unit_rows(5, 6, rng);
  const Matrix bank = random_unit_rows(7, 6, rng);

  // identical views: collapses to the one-directional loss exactly
  const SymmetricResult same = symmetric_loss(a, a, bank, 0.12);
  CHECK(same.loss == info_nce(a, a, bank, 0.12).loss);

  // swap invariance is bitwise
  const SymmetricResult fwd = symmetric_loss(a, b, bank, 0.12);
  const SymmetricResult rev = symmetric_loss(b, a, bank, 0.12);
  CHECK(fwd.loss == rev.loss);

  // equals the mean of the two directional losses
  const double mean =
      0.5 * (info_nce(a, b, bank, 0.12).loss + info_nce(b, a, bank, 0.12).loss);
  CHECK(std::abs(fwd.loss - mean) <= 1e-12);

  // and its gradients are the means of the directional gradients
  const ContrastResult r_ab = info_nce(a, b, bank, 0.12);
  const ContrastResult r_ba = info_nce(b, a, bank, 0.12);
  const QueryKeyGrads g_ab = query_grad(r_ab, a, b, bank);
  const QueryKeyGrads g_ba = query_grad(r_ba, b, a, bank);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < a.cols(); ++c)
      CHECK(fwd.d_view_a.at(i, c) ==
            doctest::Approx(0.5 * (g_ab.d_queries.at(i, c) + g_ba.d_keys.at(i, c)))
                .epsilon(1e-12));
  Matrix bank_mean = adversary_grad(r_ab, a);
  add_scaled(bank_mean, adversary_grad(r_ba, b), 1.0);
  scale(bank_mean, 0.5);
  for (std::size_t k = 0; k < bank.rows(); ++k)
    for (std::size_t c = 0; c < bank.cols(); ++c)
      CHECK(fwd.d_bank.at(k, c) == doctest::Approx(bank_mean.at(k, c)).epsilon(1e-12));
}

TEST_CASE("unconstrained ascent strictly increases the loss") {
  SeededRng rng(110);
  int increased = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(6, 6, inst);
    const Matrix keys = random_unit_rows(6, 6, inst);
    Matrix bank = random_unit_rows(10, 6, inst);
    const double tau = 0.12;
    const ContrastResult res = info_nce(queries, keys, bank, tau);
    const Matrix grad = adversary_grad(res, queries);
    add_scaled(bank, grad, 1e-4);
    const double after = info_nce(queries, keys, bank, tau, NormCheck::off).loss;
    if (after > res.loss) ++increased;
  }
  CHECK(increased == trials);
}

TEST_CASE("lower temperature sharpens the assignment among negatives") {
  SeededRng rng(111);
  for (int t = 0; t < 200; ++t) {
    SeededRng inst = rng.child(t);
    const Matrix queries = random_unit_rows(3, 5, inst);
    const Matrix keys = random_unit_rows(3, 5, inst);
    const Matrix bank = random_unit_rows(6, 5, inst);
    const double tau_high = inst.next_uniform(0.2, 2.0);
    const double tau_low = tau_high * inst.next_uniform(0.1, 0.9);
    const ContrastResult hi = info_nce(queries, keys, bank, tau_high);
    const ContrastResult lo = info_nce(queries, keys, bank, tau_low);
    for (std::size_t i = 0; i < queries.rows(); ++i) {
      // renormalize over the negatives so the comparison is about how the
      // negative mass concentrates
      double hi_sum = 0.0, lo_sum = 0.0, hi_max = 0.0, lo_max = 0.0;
      for (std::size_t k = 0; k < bank.rows(); ++k) {
        hi_sum += hi.neg_prob.at(i, k);
        lo_sum += lo.neg_prob.at(i, k);
        hi_max = std::max(hi_max, hi.neg_prob.at(i, k));
        lo_max = std::max(lo_max, lo.neg_prob.at(i, k));
      }
      CHECK(lo_max / lo_sum >= hi_max / hi_sum - 1e-12);
    }
  }
}

TEST_SUITE_END();
