#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "adco/matrix.hpp"
#include "adco/numerics.hpp"
#include "adco/rng.hpp"

namespace adco::test {

// Brute-force contrastive loss: recomputes the loss term by term with naive
// exp/log in long double, no max subtraction, no shared code with info_nce.
// Only usable at moderate temperatures where naive exponentials are safe.
inline double naive_info_nce_loss(const Matrix& queries, const Matrix& keys,
                                  const Matrix& bank, double tau) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    long double pos = 0.0L;
    for (std::size_t c = 0; c < queries.cols(); ++c)
      pos += static_cast<long double>(queries.at(i, c)) * keys.at(i, c);
    long double denom = std::exp(pos / tau);
    for (std::size_t k = 0; k < bank.rows(); ++k) {
      long double sim = 0.0L;
      for (std::size_t c = 0; c < queries.cols(); ++c)
        sim += static_cast<long double>(queries.at(i, c)) * bank.at(k, c);
      denom += std::exp(sim / tau);
    }
    total += -std::log(std::exp(pos / tau) / denom);
  }
  return static_cast<double>(total / static_cast<long double>(queries.rows()));
}

inline Matrix random_unit_rows(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.next_gaussian();
  l2_normalize_rows(m);
  return m;
}

inline std::vector<double> to_vector(const Matrix& m) {
  return {m.flat().begin(), m.flat().end()};
}

inline Matrix from_vector(const std::vector<double>& flat, std::size_t rows,
                          std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < flat.size(); ++i) m.flat()[i] = flat[i];
  return m;
}

// Unique scratch directory under the ctest working directory.
std::string scratch_dir(const std::string& tag);

}  // namespace adco::test
