#include "adco/runner.hpp"

#include <cassert>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <future>

#include "adco/checkpoint.hpp"
#include "adco/errors.hpp"
#include "adco/eval.hpp"
#include "adco/trainer.hpp"

namespace adco {
namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_snapshot(const ExperimentConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text(out_dir + "/resolved_config.json", resolved_config_json(config));
}

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  assert(ec == std::errc{});
  return std::string(buf, ptr);
}

struct RunEval {
  double probe_acc = 0.0;
  double knn_acc = 0.0;
  ProbeResult probe;
};

RunEval evaluate_encoder(const MlpEncoder& encoder, const ExperimentConfig& config,
                         const LabeledDataset& train, const LabeledDataset& test) {
  RunEval ev;
  const Matrix train_emb = encoder.forward(train.samples);
  const Matrix test_emb = encoder.forward(test.samples);
  ev.probe = linear_probe(train_emb, train.labels, test_emb, test.labels,
                          config.eval.probe);
  ev.probe_acc = ev.probe.top1_accuracy;
  ev.knn_acc =
      knn_accuracy(train_emb, train.labels, test_emb, test.labels, config.eval.knn_k);
  return ev;
}

}  // namespace

PretrainArtifacts run_pretrain(const ExperimentConfig& config, const std::string& out_dir,
                               bool include_timing) {
  config.validate();
  write_snapshot(config, out_dir);
  const LabeledDataset train = load_split(config).first;
  pretrain(config, train, out_dir, include_timing);

  PretrainArtifacts artifacts;
  artifacts.out_dir = out_dir;
  artifacts.trainlog_csv = out_dir + "/trainlog.csv";
  artifacts.encoder_checkpoint = out_dir + "/encoder_final.ckpt";
  if (config.negatives.mode != NegativesMode::in_batch)
    artifacts.bank_checkpoint = out_dir + "/bank_final.ckpt";
  return artifacts;
}

ProbeArtifacts run_probe(const std::string& checkpoint_path, const ExperimentConfig& config,
                         const std::string& out_dir) {
  config.validate();
  const MlpEncoder encoder = load_encoder(checkpoint_path);
  const auto [train, test] = load_split(config);
  if (train.dim() != encoder.input_dim())
    throw ConfigError("probe: data dim " + std::to_string(train.dim()) +
                      " does not match encoder input dim " +
                      std::to_string(encoder.input_dim()));
  write_snapshot(config, out_dir);

  const RunEval ev = evaluate_encoder(encoder, config, train, test);

  std::string csv = "metric,value\n";
  csv += "top1_accuracy," + fmt_double(ev.probe_acc) + "\n";
  csv += "knn_accuracy," + fmt_double(ev.knn_acc) + "\n";
  csv += "train_count," + std::to_string(ev.probe.train_count) + "\n";
  csv += "test_count," + std::to_string(ev.probe.test_count) + "\n";
  for (std::size_t c = 0; c < ev.probe.per_class_accuracy.size(); ++c)
    csv += "class_" + std::to_string(c) + "_accuracy," +
           fmt_double(ev.probe.per_class_accuracy[c]) + "\n";
  const std::string metrics_path = out_dir + "/probe_metrics.csv";
  write_text(metrics_path, csv);

  ProbeArtifacts artifacts;
  artifacts.top1_accuracy = ev.probe_acc;
  artifacts.knn_accuracy = ev.knn_acc;
  artifacts.metrics_csv = metrics_path;
  return artifacts;
}

GradcheckReport run_gradcheck(const GradcheckConfig& config,
                              const std::optional<std::string>& out_dir) {
  const GradcheckReport report = gradcheck_suite(config);
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text(*out_dir + "/gradcheck.csv", report.to_csv());
  }
  return report;
}

std::vector<SweepRow> run_sweep_negatives(const ExperimentConfig& config,
                                          const std::vector<std::size_t>& k_list,
                                          const std::string& out_dir, bool parallel) {
  if (k_list.empty()) throw ConfigError("sweep: k_list must be nonempty");
  config.validate();
  fs::create_directories(out_dir);
  write_snapshot(config, out_dir);
  const std::string shared_hash = config_hash(config, /*mask_bank_size=*/true);

  auto one_run = [&](std::size_t k) {
    SweepRow row;
    row.bank_size = k;
    row.shared_config_hash = shared_hash;
    try {
      ExperimentConfig run_cfg = config;
      run_cfg.negatives.bank_size = k;
      const std::string run_dir = out_dir + "/k_" + std::to_string(k);
      const auto [train, test] = load_split(run_cfg);
      const PretrainResult result = pretrain(run_cfg, train, run_dir);
      const RunEval ev = evaluate_encoder(result.encoder, run_cfg, train, test);
      row.probe_accuracy = ev.probe_acc;
      row.knn_accuracy = ev.knn_acc;
      if (!result.log.records.empty()) {
        row.final_mean_nn_cosine = result.log.records.back().mean_nn_cosine;
        row.final_outlier_count = result.log.records.back().outlier_count;
      }
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();  // record and keep sweeping
    }
    return row;
  };

  std::vector<SweepRow> rows;
  if (parallel) {
    std::vector<std::future<SweepRow>> futures;
    futures.reserve(k_list.size());
    for (std::size_t k : k_list)
      futures.push_back(std::async(std::launch::async, one_run, k));
    for (auto& f : futures) rows.push_back(f.get());
  } else {
    for (std::size_t k : k_list) rows.push_back(one_run(k));
  }

  std::string csv =
      "bank_size,ok,probe_accuracy,knn_accuracy,final_mean_nn_cosine,final_outlier_count,"
      "config_hash_non_k,error\n";
  for (const SweepRow& row : rows) {
    csv += std::to_string(row.bank_size) + "," + (row.ok ? "1" : "0") + "," +
           fmt_double(row.probe_accuracy) + "," + fmt_double(row.knn_accuracy) + "," +
           fmt_double(row.final_mean_nn_cosine) + "," +
           std::to_string(row.final_outlier_count) + "," + row.shared_config_hash + "," +
           row.error + "\n";
  }
  write_text(out_dir + "/sweep_summary.csv", csv);
  return rows;
}

std::vector<BenchRow> run_bench_baselines(const ExperimentConfig& config,
                                          const std::string& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
  write_snapshot(config, out_dir);

  // same seed and budget everywhere; only the negatives mode varies
  ExperimentConfig masked = config;
  masked.negatives.mode = NegativesMode::adversarial;
  const std::string shared_hash = config_hash(masked);

  std::vector<BenchRow> rows;
  for (const NegativesMode mode :
       {NegativesMode::adversarial, NegativesMode::fifo, NegativesMode::in_batch}) {
    ExperimentConfig run_cfg = config;
    run_cfg.negatives.mode = mode;
    const std::string run_dir = out_dir + "/" + to_string(mode);
    const auto [train, test] = load_split(run_cfg);
    const PretrainResult result = pretrain(run_cfg, train, run_dir);
    const RunEval ev = evaluate_encoder(result.encoder, run_cfg, train, test);

    BenchRow row;
    row.mode = to_string(mode);
    row.config_hash = shared_hash;
    row.probe_accuracy = ev.probe_acc;
    row.knn_accuracy = ev.knn_acc;
    if (!result.log.records.empty()) {
      row.final_mean_nn_cosine = result.log.records.back().mean_nn_cosine;
      row.final_outlier_count = result.log.records.back().outlier_count;
    }
    row.min_rows_changed = SIZE_MAX;
    for (const TrainRecord& rec : result.log.records) {
      row.min_rows_changed = std::min(row.min_rows_changed, rec.rows_changed);
      row.max_rows_changed = std::max(row.max_rows_changed, rec.rows_changed);
    }
    if (result.log.records.empty()) row.min_rows_changed = 0;

    // the structural contrast between the modes, asserted from the log
    switch (mode) {
      case NegativesMode::adversarial:
        row.rows_changed_ok = row.min_rows_changed == config.negatives.bank_size &&
                              row.max_rows_changed == config.negatives.bank_size;
        break;
      case NegativesMode::fifo:
        row.rows_changed_ok =
            row.max_rows_changed <= static_cast<std::size_t>(config.train.batch_size);
        break;
      case NegativesMode::in_batch:
        row.rows_changed_ok = row.max_rows_changed == 0;
        break;
    }
    if (!row.rows_changed_ok)
      throw NumericError("bench: rows-changed invariant violated in mode " + row.mode);
    rows.push_back(row);
  }

  std::string csv =
      "mode,probe_accuracy,knn_accuracy,final_mean_nn_cosine,final_outlier_count,"
      "min_rows_changed,max_rows_changed,rows_changed_ok,config_hash\n";
  for (const BenchRow& row : rows) {
    csv += row.mode + "," + fmt_double(row.probe_accuracy) + "," +
           fmt_double(row.knn_accuracy) + "," + fmt_double(row.final_mean_nn_cosine) +
           "," + std::to_string(row.final_outlier_count) + "," +
           std::to_string(row.min_rows_changed) + "," +
           std::to_string(row.max_rows_changed) + "," +
           (row.rows_changed_ok ? "1" : "0") + "," + row.config_hash + "\n";
  }
  write_text(out_dir + "/bench_summary.csv", csv);
  return rows;
}

void run_export_embeddings(const std::string& checkpoint_path, const ExperimentConfig& config,
                           const std::string& out_csv, bool use_train_split,
                           const std::optional<std::string>& bank_path) {
  config.validate();
  const MlpEncoder encoder = load_encoder(checkpoint_path);
  const auto [train, test] = load_split(config);
  const LabeledDataset& split = use_train_split ? train : test;
  if (split.dim() != encoder.input_dim())
    throw ConfigError("export: data dim does not match encoder input dim");

  Matrix embeddings = encoder.forward(split.samples);
  std::vector<int> labels = split.labels;

  if (bank_path) {
    const Matrix bank = load_bank(*bank_path);
    if (bank.cols() != embeddings.cols())
      throw ConfigError("export: bank dim does not match embedding dim");
    Matrix combined(embeddings.rows() + bank.rows(), embeddings.cols());
    for (std::size_t r = 0; r < embeddings.rows(); ++r)
      combined.set_row(r, embeddings.row(r));
    for (std::size_t r = 0; r < bank.rows(); ++r)
      combined.set_row(embeddings.rows() + r, bank.row(r));
    embeddings = std::move(combined);
    labels.insert(labels.end(), bank.rows(), -1);  // bank rows use label -1
  }
  save_csv(embeddings, labels, out_csv);
}

}  // namespace adco
