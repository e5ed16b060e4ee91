#include "adco/negatives.hpp"

#include <algorithm>
#include <cmath>

#include "adco/errors.hpp"
#include "adco/numerics.hpp"

namespace adco {

std::string to_string(NegativesMode mode) {
  switch (mode) {
    case NegativesMode::adversarial: return "adversarial";
    case NegativesMode::fifo: return "fifo";
    case NegativesMode::in_batch: return "in_batch";
  }
  return "unknown";
}

NegativesMode negatives_mode_from_string(const std::string& s) {
  if (s == "adversarial") return NegativesMode::adversarial;
  if (s == "fifo") return NegativesMode::fifo;
  if (s == "in_batch") return NegativesMode::in_batch;
  throw ConfigError("unknown negatives mode '" + s + "'");
}

NegativeBank::NegativeBank(Matrix rows) : bank_(std::move(rows)) {
  if (bank_.rows() == 0 || bank_.cols() == 0)
    throw ConfigError("negative bank must be non-empty");
  l2_normalize_rows(bank_);
  velocity_ = Matrix(bank_.rows(), bank_.cols());
}

NegativeBank NegativeBank::init_from_encoder(const LabeledDataset& data,
                                             const MlpEncoder& encoder, std::size_t k,
                                             SeededRng rng) {
  if (data.size() == 0) throw ConfigError("init_from_encoder: empty dataset");
  if (k == 0) throw ConfigError("init_from_encoder: k must be positive");
  Matrix picks(k, data.dim());
  for (std::size_t i = 0; i < k; ++i) {
    // with replacement, so k may exceed the dataset size
    const std::size_t idx = rng.next_u64() % data.size();
    picks.set_row(i, data.samples.row(idx));
  }
  return NegativeBank(encoder.forward(picks));
}

void NegativeBank::adversarial_step(const Matrix& grad, const AdversarialUpdate& update) {
  if (!grad.same_shape(bank_)) throw ShapeError("adversarial_step: gradient shape mismatch");
  if (!grad.all_finite()) throw NumericError("adversarial_step: non-finite gradient");

  for (std::size_t r = 0; r < bank_.rows(); ++r) {
    auto n = bank_.row(r);
    auto g = grad.row(r);
    auto v = velocity_.row(r);
    double radial = 0.0;
    if (update.mode == BankUpdateMode::tangent) radial = dot(g, n);
    for (std::size_t c = 0; c < bank_.cols(); ++c) {
      double step_grad = g[c];
      if (update.mode == BankUpdateMode::tangent) step_grad -= radial * n[c];
      // ascent towards the queries; decay opposes pre-projection growth
      step_grad -= update.weight_decay * n[c];
      v[c] = update.momentum * v[c] + step_grad;
      n[c] += update.lr * v[c];
    }
    const double nn = norm(n);
    if (!(nn >= kNormEps))
      throw NumericError("adversarial_step: row collapsed to zero norm");
    for (double& x : n) x /= nn;
  }
}

FifoQueue::FifoQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), storage_(capacity, dim) {
  if (capacity == 0 || dim == 0) throw ConfigError("fifo queue needs capacity and dim");
}

FifoQueue FifoQueue::warm(Matrix initial) {
  FifoQueue q(initial.rows(), initial.cols());
  q.storage_ = std::move(initial);
  q.size_ = q.capacity_;
  q.cursor_ = 0;  // oldest entry is row 0
  return q;
}

void FifoQueue::push(const Matrix& batch_keys) {
  if (batch_keys.cols() != storage_.cols())
    throw ShapeError("fifo push: key dimension mismatch");
  if (batch_keys.rows() > capacity_)
    throw ConfigError("fifo push: batch larger than queue capacity");
  for (std::size_t i = 0; i < batch_keys.rows(); ++i) {
    storage_.set_row(cursor_, batch_keys.row(i));
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }
}

Matrix FifoQueue::filled() const {
  if (size_ == capacity_) return storage_;
  Matrix out(size_, storage_.cols());
  for (std::size_t i = 0; i < size_; ++i) out.set_row(i, storage_.row(i));
  return out;
}

Matrix FifoQueue::contents() const {
  Matrix out(size_, storage_.cols());
  // before wrap-around the oldest entry is row 0; afterwards it is cursor_
  const std::size_t oldest = size_ == capacity_ ? cursor_ : 0;
  for (std::size_t i = 0; i < size_; ++i)
    out.set_row(i, storage_.row((oldest + i) % capacity_));
  return out;
}

Matrix in_batch_negatives(const Matrix& keys, std::size_t query_index) {
  if (keys.rows() < 2)
    throw ConfigError("in_batch_negatives: need at least 2 samples in the batch");
  if (query_index >= keys.rows())
    throw ShapeError("in_batch_negatives: query index out of range");
  Matrix out(keys.rows() - 1, keys.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < keys.rows(); ++i) {
    if (i == query_index) continue;
    out.set_row(r++, keys.row(i));
  }
  return out;
}

CoverageStats bank_coverage_stats(const Matrix& bank, const Matrix& queries,
                                  double outlier_threshold) {
  if (bank.rows() == 0 || queries.rows() == 0)
    throw ConfigError("bank_coverage_stats: empty bank or query set");
  if (bank.cols() != queries.cols())
    throw ShapeError("bank_coverage_stats: dimension mismatch");

  CoverageStats stats;
  stats.min_nn_cosine = 2.0;
  stats.max_nn_cosine = -2.0;
  double total = 0.0;
  for (std::size_t k = 0; k < bank.rows(); ++k) {
    double best = -2.0;
    for (std::size_t i = 0; i < queries.rows(); ++i)
      best = std::max(best, dot(bank.row(k), queries.row(i)));
    total += best;
    stats.min_nn_cosine = std::min(stats.min_nn_cosine, best);
    stats.max_nn_cosine = std::max(stats.max_nn_cosine, best);
    if (best < outlier_threshold) ++stats.outlier_count;
  }
  stats.mean_nn_cosine = total / static_cast<double>(bank.rows());
  return stats;
}

std::size_t AdversarialProvider::post_step(const ProviderUpdate& update) {
  if (!update.bank_grad)
    throw ConfigError("adversarial provider: post_step needs a bank gradient");
  bank_.adversarial_step(*update.bank_grad, update.adversarial);
  return bank_.size();
}

std::size_t FifoProvider::post_step(const ProviderUpdate& update) {
  if (!update.batch_keys)
    throw ConfigError("fifo provider: post_step needs the batch keys");
  queue_.push(*update.batch_keys);
  return update.batch_keys->rows();
}

}  // namespace adco
