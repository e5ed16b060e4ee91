#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "adco/data.hpp"
#include "adco/encoder.hpp"
#include "adco/matrix.hpp"
#include "adco/rng.hpp"

namespace adco {

enum class NegativesMode { adversarial, fifo, in_batch };

std::string to_string(NegativesMode mode);
NegativesMode negatives_mode_from_string(const std::string& s);

enum class BankUpdateMode { renormalize, tangent };

struct AdversarialUpdate {
  double lr = 3.0;
  double momentum = 0.0;
  double weight_decay = 0.0;
  BankUpdateMode mode = BankUpdateMode::renormalize;
};

// K x d matrix of trainable unit-norm negatives, updated by projected
// gradient ascent. K is fixed after construction.
class NegativeBank {
 public:
  explicit NegativeBank(Matrix rows);

  // Encodes K dataset samples drawn with replacement; deterministic in rng.
  static NegativeBank init_from_encoder(const LabeledDataset& data,
                                        const MlpEncoder& encoder, std::size_t k,
                                        SeededRng rng);

  std::size_t size() const { return bank_.rows(); }
  std::size_t dim() const { return bank_.cols(); }
  const Matrix& matrix() const { return bank_; }
  const Matrix& velocity() const { return velocity_; }

  // Ascent step (note the + sign) followed by row re-projection to the unit
  // sphere. With momentum m: v = m*v + g, step uses v. In tangent mode the
  // radial component (g.n)n is removed from the update before the step.
  void adversarial_step(const Matrix& grad, const AdversarialUpdate& update);

 private:
  Matrix bank_;
  Matrix velocity_;
};

// Fixed-capacity ring buffer of unit-norm key embeddings with strict FIFO
// eviction. Row storage positions are stable: one push overwrites exactly
// the batch-size oldest rows and leaves every other row untouched.
class FifoQueue {
 public:
  FifoQueue(std::size_t capacity, std::size_t dim);

  // Starts at full capacity with the given contents (oldest row first).
  static FifoQueue warm(Matrix initial);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::size_t dim() const { return storage_.cols(); }

  // Appends batch_keys, evicting the oldest entries once at capacity.
  void push(const Matrix& batch_keys);

  // Rows in stable storage order (what the loss consumes). Only the first
  // size() rows are valid before warm-up completes.
  const Matrix& storage() const { return storage_; }
  Matrix filled() const;

  // Entries in insertion order, oldest first.
  Matrix contents() const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;  // next write position
  Matrix storage_;
};

// Returns a copy of the rows of keys with query_index excluded.
Matrix in_batch_negatives(const Matrix& keys, std::size_t query_index);

struct CoverageStats {
  double mean_nn_cosine = 0.0;  // mean over negatives of max_i cos(n_k, q_i)
  double min_nn_cosine = 0.0;
  double max_nn_cosine = 0.0;
  std::size_t outlier_count = 0;  // negatives with nearest-query cosine < threshold
};

// Nearest-query cosine statistics of a negative set; the quantitative proxy
// for how closely the negatives track the current queries.
CoverageStats bank_coverage_stats(const Matrix& bank, const Matrix& queries,
                                  double outlier_threshold = 0.2);

// What the trainer hands a provider after each iteration. Adversarial mode
// consumes bank_grad + update parameters, fifo consumes batch_keys, in-batch
// ignores everything.
struct ProviderUpdate {
  const Matrix* bank_grad = nullptr;
  AdversarialUpdate adversarial;
  const Matrix* batch_keys = nullptr;
};

// Uniform contract over the three ways of sourcing negatives.
class NegativeProvider {
 public:
  virtual ~NegativeProvider() = default;

  virtual NegativesMode mode() const = 0;

  // Negatives to score the batch against; nullptr in in-batch mode, where
  // each query uses the other keys of its own minibatch.
  virtual const Matrix* negatives() const = 0;

  // Post-iteration notification; returns the number of rows written.
  virtual std::size_t post_step(const ProviderUpdate& update) = 0;
};

class AdversarialProvider final : public NegativeProvider {
 public:
  explicit AdversarialProvider(NegativeBank bank) : bank_(std::move(bank)) {}
  NegativesMode mode() const override { return NegativesMode::adversarial; }
  const Matrix* negatives() const override { return &bank_.matrix(); }
  std::size_t post_step(const ProviderUpdate& update) override;
  const NegativeBank& bank() const { return bank_; }

 private:
  NegativeBank bank_;
};

class FifoProvider final : public NegativeProvider {
 public:
  explicit FifoProvider(FifoQueue queue) : queue_(std::move(queue)) {}
  NegativesMode mode() const override { return NegativesMode::fifo; }
  const Matrix* negatives() const override { return &queue_.storage(); }
  std::size_t post_step(const ProviderUpdate& update) override;
  const FifoQueue& queue() const { return queue_; }

 private:
  FifoQueue queue_;
};

class InBatchProvider final : public NegativeProvider {
 public:
  NegativesMode mode() const override { return NegativesMode::in_batch; }
  const Matrix* negatives() const override { return nullptr; }
  std::size_t post_step(const ProviderUpdate&) override { return 0; }
};

}  // namespace adco
