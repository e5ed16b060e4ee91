#pragma once

#include <vector>

#include "adco/matrix.hpp"

namespace adco {

// Whether a loss entry point verifies that input rows are unit-norm.
// `off` exists for the finite-difference oracle and for unconstrained-step
// probes, both of which evaluate the loss at points slightly off the sphere.
enum class NormCheck { strict, off };

struct LossConfig {
  double tau_net = 0.12;  // temperature for the encoder-side loss
  double tau_adv = 0.02;  // temperature for the negative-bank update
  bool symmetric = false;

  void validate() const;
};

// Loss value plus the assignment probabilities the gradients reuse.
// Closure invariant: pos_prob[i] + sum_k neg_prob(i,k) == 1 for every query.
struct ContrastResult {
  double loss = 0.0;
  std::vector<double> pos_prob;  // p(key_i | query_i), length N
  Matrix neg_prob;               // p(neg_k | query_i), N x K
  double tau = 0.0;
};

// Contrastive loss over a batch: key i is the positive for query i, every
// bank row is a shared negative. All rows are expected unit-norm so dot
// products are cosine similarities. K = 0 is legal and gives zero loss.
ContrastResult info_nce(const Matrix& queries, const Matrix& keys, const Matrix& bank,
                        double tau, NormCheck check = NormCheck::strict);

// Ascent direction for each bank row: row k = (1/(N*tau)) sum_i p(n_k|q_i) q_i.
// The derivative is taken with respect to the already-normalized negative;
// re-projection to the sphere happens in the bank update, not here.
Matrix adversary_grad(const ContrastResult& result, const Matrix& queries);

struct QueryKeyGrads {
  Matrix d_queries;  // N x d
  Matrix d_keys;     // N x d
};

// Loss derivative with respect to the embeddings, the chain-rule input for
// the encoder backward pass:
//   dL/dq_i = (1/(N*tau)) [(p(k_i|q_i) - 1) k_i + sum_k p(n_k|q_i) n_k]
//   dL/dk_i = (1/(N*tau)) (p(k_i|q_i) - 1) q_i
QueryKeyGrads query_grad(const ContrastResult& result, const Matrix& queries,
                         const Matrix& keys, const Matrix& bank);

struct AltLossResult {
  double value = 0.0;
  Matrix probs;       // p(q_i | n_k), N x K; every column sums to 1
};

// Alternative adversarial objective J = tau * sum_k log sum_i exp(q_i.n_k/tau).
// Its bank gradient is the conditional expectation of the queries.
AltLossResult alt_loss_j(const Matrix& queries, const Matrix& bank, double tau,
                         NormCheck check = NormCheck::strict);

// Row k = sum_i p(q_i|n_k) q_i. Each row is a convex combination of the
// queries. Throws ProbabilityError when a column of probs does not sum to 1.
Matrix alt_loss_grad(const Matrix& probs, const Matrix& queries);

struct SymmetricResult {
  double loss = 0.0;
  Matrix d_view_a;
  Matrix d_view_b;
  Matrix d_bank;
};

// Averages the loss over both directions of a view pair; gradients are the
// means of the two directional gradients.
SymmetricResult symmetric_loss(const Matrix& view_a, const Matrix& view_b,
                               const Matrix& bank, double tau,
                               NormCheck check = NormCheck::strict);

}  // namespace adco
