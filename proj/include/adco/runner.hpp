#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adco/config.hpp"
#include "adco/gradcheck.hpp"

namespace adco {

// Library backing for the CLI subcommands. Each run_* writes a resolved
// config snapshot into its output directory so every artifact can be
// reproduced from the directory alone. Exit-code mapping lives in the CLI:
// 0 ok, 2 config/usage, 3 runtime numeric abort.

struct PretrainArtifacts {
  std::string out_dir;
  std::string trainlog_csv;
  std::string encoder_checkpoint;
  std::optional<std::string> bank_checkpoint;
};

PretrainArtifacts run_pretrain(const ExperimentConfig& config, const std::string& out_dir,
                               bool include_timing = false);

struct ProbeArtifacts {
  double top1_accuracy = 0.0;
  double knn_accuracy = 0.0;
  std::string metrics_csv;
};

ProbeArtifacts run_probe(const std::string& checkpoint_path, const ExperimentConfig& config,
                         const std::string& out_dir);

// Writes the gradient-check report; returns it so callers can set the exit
// status. out_dir optional: the report always goes to stdout-ready text.
GradcheckReport run_gradcheck(const GradcheckConfig& config,
                              const std::optional<std::string>& out_dir);

struct SweepRow {
  std::size_t bank_size = 0;
  bool ok = false;
  std::string error;
  double probe_accuracy = 0.0;
  double knn_accuracy = 0.0;
  double final_mean_nn_cosine = 0.0;
  std::size_t final_outlier_count = 0;
  std::string shared_config_hash;  // identical across rows by construction
};

std::vector<SweepRow> run_sweep_negatives(const ExperimentConfig& config,
                                          const std::vector<std::size_t>& k_list,
                                          const std::string& out_dir, bool parallel = false);

struct BenchRow {
  std::string mode;
  double probe_accuracy = 0.0;
  double knn_accuracy = 0.0;
  double final_mean_nn_cosine = 0.0;
  std::size_t final_outlier_count = 0;
  std::size_t min_rows_changed = 0;
  std::size_t max_rows_changed = 0;
  bool rows_changed_ok = false;  // adversarial: always K; fifo: <= batch; in_batch: 0
  std::string config_hash;       // shared seed/budget hash (mode masked)
};

std::vector<BenchRow> run_bench_baselines(const ExperimentConfig& config,
                                          const std::string& out_dir);

// Embeds the chosen split with a frozen encoder and writes feature+label
// CSV; bank rows (label -1) are appended when bank_path is given.
void run_export_embeddings(const std::string& checkpoint_path, const ExperimentConfig& config,
                           const std::string& out_csv, bool use_train_split,
                           const std::optional<std::string>& bank_path);

}  // namespace adco
