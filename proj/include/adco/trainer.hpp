#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adco/config.hpp"
#include "adco/contrast.hpp"
#include "adco/data.hpp"
#include "adco/encoder.hpp"
#include "adco/negatives.hpp"
#include "adco/optim.hpp"

namespace adco {

struct TrainRecord {
  int epoch = 0;
  long step = 0;
  double loss = 0.0;
  double lr_net = 0.0;
  double lr_adv = 0.0;
  double mean_nn_cosine = 0.0;
  std::size_t outlier_count = 0;
  double elapsed_ms = 0.0;
  std::size_t rows_changed = 0;  // provider rows written this iteration
};

struct TrainLog {
  std::vector<TrainRecord> records;

  // Columns: epoch,step,loss,lr_net,lr_adv,mean_nn_cosine,outlier_count,elapsed_ms.
  // Timing is zeroed unless include_timing is set, keeping the file a pure
  // function of (config, seed).
  void write_csv(const std::string& path, bool include_timing = false) const;
};

// Per-query in-batch contrastive loss: query i scores against its own key
// and the other N-1 keys of the batch.
struct InBatchGrads {
  double loss = 0.0;
  Matrix d_queries;
  Matrix d_keys;
};
InBatchGrads in_batch_loss_grads(const Matrix& queries, const Matrix& keys, double tau);

// Backpropagates embedding gradients through both view tapes and sums the
// parameter gradients. Key-side gradients are dropped when stop_gradient_key.
EncoderGrads encoder_grads_for_views(const MlpEncoder& encoder, const ForwardTape& tape_a,
                                     const ForwardTape& tape_b, const Matrix& d_view_a,
                                     const Matrix& d_view_b, bool stop_gradient_key);

struct StepOutcome {
  double loss = 0.0;
  std::size_t rows_changed = 0;
  CoverageStats coverage;
};

// One alternating iteration: augment, forward both views, encoder descent at
// tau_net, then the provider update (adversary ascent at tau_adv, fifo push,
// or nothing for in-batch). item_ids are dataset indices; the augmentation
// stream for an item is epoch_aug_rng.child(item_id).
StepOutcome train_step(MlpEncoder& encoder, NegativeProvider& provider,
                       const Matrix& batch, std::span<const std::size_t> item_ids,
                       const ExperimentConfig& config, SgdState& opt_net,
                       double lr_net_now, double lr_adv_now,
                       const SeededRng& epoch_aug_rng);

struct PretrainResult {
  MlpEncoder encoder;
  std::unique_ptr<NegativeProvider> provider;
  TrainLog log;
  std::size_t steps_per_epoch = 0;
};

std::unique_ptr<NegativeProvider> make_provider(const ExperimentConfig& config,
                                                const LabeledDataset& train_data,
                                                const MlpEncoder& encoder);

// Full run over the given training data. When out_dir is set, writes
// trainlog.csv, periodic and final checkpoints into it; on a numeric abort
// the partial trainlog and a diagnostic file are preserved before the
// NumericError propagates.
PretrainResult pretrain(const ExperimentConfig& config, const LabeledDataset& train_data,
                        const std::optional<std::string>& out_dir = std::nullopt,
                        bool include_timing = false);

// Builds the training split from the config, then trains.
PretrainResult pretrain(const ExperimentConfig& config);

// Training data as described by the config (synthetic mixture or CSV).
std::pair<LabeledDataset, LabeledDataset> load_split(const ExperimentConfig& config);

}  // namespace adco
