#include "adco/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "adco/errors.hpp"

namespace adco {

std::vector<double> l2_normalize(std::span<const double> v) {
  const double n = norm(v);
  if (!(n >= kNormEps))
    throw DegenerateVector("l2_normalize: vector norm below 1e-12");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

void l2_normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = norm(row);
    if (!(n >= kNormEps))
      throw DegenerateVector("l2_normalize_rows: row norm below 1e-12");
    for (double& v : row) v /= n;
  }
}

std::vector<double> softmax_temp(std::span<const double> scores, double tau) {
  if (!(tau > 0.0)) throw InvalidTemperature("softmax_temp: tau must be positive");
  if (scores.empty()) return {};
  const double max_score = *std::max_element(scores.begin(), scores.end());
  if (!std::isfinite(max_score))
    throw NumericError("softmax_temp: non-finite score");
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - max_score) / tau);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> x,
                                     double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = probe[j];
    probe[j] = orig + h;
    const double fp = f(probe);
    probe[j] = orig - h;
    const double fm = f(probe);
    probe[j] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw OracleEvaluationError("finite_diff_grad: non-finite function value");
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_grad_error(std::span<const double> analytic, std::span<const double> numeric,
                      double abs_floor) {
  if (analytic.size() != numeric.size())
    throw ShapeError("max_grad_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    if (diff <= abs_floor) continue;
    const double mag = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    worst = std::max(worst, diff / mag);
  }
  return worst;
}

}  // namespace adco
