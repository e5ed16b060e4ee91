#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adco/contrast.hpp"
#include "adco/data.hpp"
#include "adco/eval.hpp"
#include "adco/negatives.hpp"
#include "adco/optim.hpp"

namespace adco {

enum class ScheduleGranularity { step, epoch };

struct DataConfig {
  GaussianMixtureSpec mixture;
  int test_per_class = 125;
  AugmentPolicy augment;
  // CSV paths override the synthetic mixture when set.
  std::optional<std::string> train_csv;
  std::optional<std::string> test_csv;
};

struct NegativesConfig {
  NegativesMode mode = NegativesMode::adversarial;
  std::size_t bank_size = 1024;
  AdversarialUpdate update;  // lr here is the base rate; cosine-decayed per step
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  ScheduleGranularity granularity = ScheduleGranularity::step;
  int checkpoint_every_epochs = 10;  // 0 disables periodic checkpoints
  bool refresh_embeddings = false;   // re-forward after the encoder step for the bank update
  bool stop_gradient_key = false;    // treat the key view as a constant
};

struct EvalConfig {
  ProbeConfig probe;
  int knn_k = 5;
};

// Everything a run needs; a resolved snapshot of this struct reproduces the
// run exactly.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  DataConfig data;
  std::vector<std::size_t> encoder_dims = {64, 128, 32};
  LossConfig loss;
  SgdConfig optimizer_net;  // encoder group
  NegativesConfig negatives;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

// JSON front end. Unknown keys and type mismatches raise ConfigError naming
// the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Dotted-path overrides ("train.epochs=5", "negatives.mode=fifo"), applied
// on top of the config file before parsing; CLI flag > file > default.
std::string apply_config_overrides(const std::string& json_text,
                                   const std::vector<std::string>& overrides);

// Full JSON with every default materialized; parse_config round-trips it.
std::string resolved_config_json(const ExperimentConfig& config);

// FNV-1a of the resolved snapshot; mask_bank_size zeroes the bank size first
// so sweep rows can prove they differ only in K.
std::string config_hash(const ExperimentConfig& config, bool mask_bank_size = false);

}  // namespace adco
