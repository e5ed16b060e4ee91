#pragma once

#include <functional>
#include <span>
#include <vector>

#include "adco/matrix.hpp"

namespace adco {

inline constexpr double kNormEps = 1e-12;

// Scales v to unit Euclidean norm. Throws DegenerateVector when the norm is
// below kNormEps.
std::vector<double> l2_normalize(std::span<const double> v);

// Normalizes every row of m in place.
void l2_normalize_rows(Matrix& m);

// Temperature-scaled softmax with max subtraction. tau must be positive.
std::vector<double> softmax_temp(std::span<const double> scores, double tau);

using ScalarFn = std::function<double(std::span<const double>)>;

// Central-difference gradient estimate, (f(x+h e_j) - f(x-h e_j)) / (2h).
// This is the oracle every analytic gradient in the project is checked
// against. Throws OracleEvaluationError if f returns a non-finite value.
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x,
                                     double h = 1e-5);

// Comparison rule used by all gradient checks: entries whose absolute
// difference is within abs_floor pass outright, everything else is scored by
// relative error against the larger magnitude. Returns the largest relative
// error among entries above the floor (0 when all are below it).
double max_grad_error(std::span<const double> analytic, std::span<const double> numeric,
                      double abs_floor = 1e-8);

}  // namespace adco
