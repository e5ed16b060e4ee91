#include "adco/contrast.hpp"

#include <cmath>
#include <string>

#include "adco/errors.hpp"
#include "adco/numerics.hpp"

namespace adco {
namespace {

void check_unit_rows(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = norm(m.row(r));
    if (std::abs(n - 1.0) > 1e-6)
      throw NormalizationError(std::string(what) + " row " + std::to_string(r) +
                               " is not unit-norm (norm=" + std::to_string(n) + ")");
  }
}

void check_temperature(double tau) {
  if (!(tau > 0.0)) throw InvalidTemperature("temperature must be positive");
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau_net > 0.0)) throw ConfigError("loss.tau_net must be positive");
  if (!(tau_adv > 0.0)) throw ConfigError("loss.tau_adv must be positive");
}

ContrastResult info_nce(const Matrix& queries, const Matrix& keys, const Matrix& bank,
                        double tau, NormCheck check) {
  check_temperature(tau);
  if (queries.rows() != keys.rows() || queries.cols() != keys.cols())
    throw ShapeError("info_nce: queries and keys must be row-aligned");
  if (bank.rows() > 0 && bank.cols() != queries.cols())
    throw ShapeError("info_nce: bank dimension mismatch");
  if (queries.rows() == 0) throw ShapeError("info_nce: empty batch");
  if (check == NormCheck::strict) {
    check_unit_rows(queries, "queries");
    check_unit_rows(keys, "keys");
    check_unit_rows(bank, "bank");
  }

  const std::size_t n = queries.rows();
  const std::size_t k = bank.rows();
  ContrastResult res;
  res.tau = tau;
  res.pos_prob.resize(n);
  res.neg_prob = Matrix(n, k);

  const Matrix neg_sim = k > 0 ? matmul_nt(queries, bank) : Matrix(n, 0);

  double total = 0.0;
  std::vector<double> logits(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    logits[0] = dot(queries.row(i), keys.row(i)) / tau;
    for (std::size_t j = 0; j < k; ++j) logits[j + 1] = neg_sim.at(i, j) / tau;

    // log-sum-exp with max subtraction; mandatory at tau = 0.02 where naive
    // exponentials overflow
    double max_logit = logits[0];
    for (std::size_t j = 1; j <= k; ++j) max_logit = std::max(max_logit, logits[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j <= k; ++j) sum += std::exp(logits[j] - max_logit);
    const double lse = max_logit + std::log(sum);

    total += lse - logits[0];  // -log p(key|query)
    res.pos_prob[i] = std::exp(logits[0] - max_logit) / sum;
    for (std::size_t j = 0; j < k; ++j)
      res.neg_prob.at(i, j) = std::exp(logits[j + 1] - max_logit) / sum;
  }
  res.loss = total / static_cast<double>(n);
  return res;
}

Matrix adversary_grad(const ContrastResult& result, const Matrix& queries) {
  if (result.neg_prob.rows() != queries.rows())
    throw ShapeError("adversary_grad: result does not match queries");
  Matrix grad = matmul_tn(result.neg_prob, queries);  // K x d
  scale(grad, 1.0 / (static_cast<double>(queries.rows()) * result.tau));
  return grad;
}

QueryKeyGrads query_grad(const ContrastResult& result, const Matrix& queries,
                         const Matrix& keys, const Matrix& bank) {
  const std::size_t n = queries.rows();
  if (result.neg_prob.rows() != n || keys.rows() != n ||
      result.neg_prob.cols() != bank.rows())
    throw ShapeError("query_grad: result does not match inputs");

  const double inv = 1.0 / (static_cast<double>(n) * result.tau);
  QueryKeyGrads g;
  g.d_queries = bank.rows() > 0 ? matmul(result.neg_prob, bank) : Matrix(n, queries.cols());
  g.d_keys = Matrix(n, queries.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double w = result.pos_prob[i] - 1.0;
    auto dq = g.d_queries.row(i);
    auto dk = g.d_keys.row(i);
    auto qi = queries.row(i);
    auto ki = keys.row(i);
    for (std::size_t c = 0; c < queries.cols(); ++c) {
      dq[c] = inv * (dq[c] + w * ki[c]);
      dk[c] = inv * w * qi[c];
    }
  }
  return g;
}

AltLossResult alt_loss_j(const Matrix& queries, const Matrix& bank, double tau,
                         NormCheck check) {
  check_temperature(tau);
  if (bank.cols() != queries.cols())
    throw ShapeError("alt_loss_j: bank dimension mismatch");
  if (queries.rows() == 0) throw ShapeError("alt_loss_j: empty batch");
  if (check == NormCheck::strict) {
    check_unit_rows(queries, "queries");
    check_unit_rows(bank, "bank");
  }

  const std::size_t n = queries.rows();
  const std::size_t k = bank.rows();
  AltLossResult res;
  res.probs = Matrix(n, k);

  const Matrix sim = k > 0 ? matmul_nt(queries, bank) : Matrix(n, 0);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double max_logit = sim.at(0, j) / tau;
    for (std::size_t i = 1; i < n; ++i) max_logit = std::max(max_logit, sim.at(i, j) / tau);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(sim.at(i, j) / tau - max_logit);
    total += tau * (max_logit + std::log(sum));
    for (std::size_t i = 0; i < n; ++i)
      res.probs.at(i, j) = std::exp(sim.at(i, j) / tau - max_logit) / sum;
  }
  res.value = total;
  return res;
}

Matrix alt_loss_grad(const Matrix& probs, const Matrix& queries) {
  if (probs.rows() != queries.rows())
    throw ShapeError("alt_loss_grad: probs do not match queries");
  for (std::size_t j = 0; j < probs.cols(); ++j) {
    double col_sum = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) col_sum += probs.at(i, j);
    if (std::abs(col_sum - 1.0) > 1e-9)
      throw ProbabilityError("alt_loss_grad: column " + std::to_string(j) +
                             " sums to " + std::to_string(col_sum));
  }
  return matmul_tn(probs, queries);  // K x d
}

SymmetricResult symmetric_loss(const Matrix& view_a, const Matrix& view_b,
                               const Matrix& bank, double tau, NormCheck check) {
  const ContrastResult fwd = info_nce(view_a, view_b, bank, tau, check);
  const ContrastResult rev = info_nce(view_b, view_a, bank, tau, check);
  const QueryKeyGrads g_fwd = query_grad(fwd, view_a, view_b, bank);
  const QueryKeyGrads g_rev = query_grad(rev, view_b, view_a, bank);

  SymmetricResult res;
  res.loss = 0.5 * (fwd.loss + rev.loss);
  res.d_view_a = g_fwd.d_queries;
  add_scaled(res.d_view_a, g_rev.d_keys, 1.0);
  scale(res.d_view_a, 0.5);
  res.d_view_b = g_fwd.d_keys;
  add_scaled(res.d_view_b, g_rev.d_queries, 1.0);
  scale(res.d_view_b, 0.5);
  res.d_bank = adversary_grad(fwd, view_a);
  add_scaled(res.d_bank, adversary_grad(rev, view_b), 1.0);
  scale(res.d_bank, 0.5);
  return res;
}

}  // namespace adco
