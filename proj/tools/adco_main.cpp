#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adco/config.hpp"
#include "adco/errors.hpp"
#include "adco/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw adco::ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// flag > config file > default
adco::ExperimentConfig make_config(const std::string& config_path,
                                   const std::vector<std::string>& overrides,
                                   const std::optional<std::uint64_t>& seed) {
  std::string text = config_path.empty() ? "{}" : read_file(config_path);
  std::vector<std::string> all = overrides;
  if (seed) all.push_back("seed=" + std::to_string(*seed));
  text = adco::apply_config_overrides(text, all);
  return adco::parse_config(text);
}

int exit_code_for(const adco::Error& e) {
  if (dynamic_cast<const adco::ConfigError*>(&e) ||
      dynamic_cast<const adco::ParseError*>(&e) ||
      dynamic_cast<const adco::ScheduleError*>(&e) ||
      dynamic_cast<const adco::ShapeError*>(&e))
    return kExitConfig;
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adco: adversarial contrastive learning engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config,-c", config_path, "config file (JSON)");
    if (needs_config) opt->check(CLI::ExistingFile);
    cmd->add_option("--out,-o", out_dir, "output directory");
    cmd->add_option("--set", overrides,
                    "override a config field, e.g. --set train.epochs=10");
    cmd->add_option("--seed", seed, "override the run seed");
  };

  // pretrain
  auto* pretrain_cmd = app.add_subcommand("pretrain", "train encoder and negatives");
  bool timing = false;
  add_common(pretrain_cmd, true);
  pretrain_cmd->add_flag("--timing", timing,
                         "record wall-clock in trainlog.csv (breaks byte-level "
                         "reproducibility of the log)");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "linear probe on a frozen checkpoint");
  std::string checkpoint_path;
  add_common(probe_cmd, true);
  probe_cmd->add_option("--checkpoint", checkpoint_path, "encoder checkpoint")->required();

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  std::optional<std::string> gradcheck_out;
  std::uint64_t gradcheck_seed = adco::GradcheckConfig{}.seed;
  gradcheck_cmd->add_option("--out,-o", gradcheck_out, "output directory for gradcheck.csv");
  gradcheck_cmd->add_option("--seed", gradcheck_seed, "seed for random instances");

  // sweep-negatives
  auto* sweep_cmd = app.add_subcommand("sweep-negatives", "pretrain+probe per bank size");
  std::vector<std::size_t> k_list;
  bool parallel = false;
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--k", k_list, "bank sizes to sweep")->required()->delimiter(',');
  sweep_cmd->add_flag("--parallel", parallel, "run the sweep entries concurrently");

  // export-embeddings
  auto* export_cmd = app.add_subcommand("export-embeddings", "embed a split to CSV");
  std::string export_csv = "embeddings.csv";
  std::string export_split = "test";
  std::optional<std::string> bank_path;
  add_common(export_cmd, true);
  export_cmd->add_option("--checkpoint", checkpoint_path, "encoder checkpoint")->required();
  export_cmd->add_option("--out-csv", export_csv, "destination CSV");
  export_cmd->add_option("--split", export_split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  export_cmd->add_option("--bank", bank_path, "append bank rows with label -1");

  // bench-baselines
  auto* bench_cmd =
      app.add_subcommand("bench-baselines", "matched-budget run per negatives mode");
  add_common(bench_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*pretrain_cmd) {
      const adco::ExperimentConfig config = make_config(config_path, overrides, seed);
      const auto artifacts = adco::run_pretrain(config, out_dir, timing);
      std::cout << "wrote " << artifacts.trainlog_csv << "\n"
                << "wrote " << artifacts.encoder_checkpoint << "\n";
      if (artifacts.bank_checkpoint) std::cout << "wrote " << *artifacts.bank_checkpoint << "\n";
    } else if (*probe_cmd) {
      const adco::ExperimentConfig config = make_config(config_path, overrides, seed);
      const auto artifacts = adco::run_probe(checkpoint_path, config, out_dir);
      std::printf("top1_accuracy %.4f\nknn_accuracy %.4f\n", artifacts.top1_accuracy,
                  artifacts.knn_accuracy);
      std::cout << "wrote " << artifacts.metrics_csv << "\n";
    } else if (*gradcheck_cmd) {
      adco::GradcheckConfig gc;
      gc.seed = gradcheck_seed;
      const adco::GradcheckReport report = adco::run_gradcheck(gc, gradcheck_out);
      std::cout << report.to_text();
      if (!report.all_pass()) {
        std::cerr << "gradcheck FAILED\n";
        return kExitRuntime;
      }
    } else if (*sweep_cmd) {
      const adco::ExperimentConfig config = make_config(config_path, overrides, seed);
      const auto rows = adco::run_sweep_negatives(config, k_list, out_dir, parallel);
      for (const auto& row : rows) {
        if (row.ok)
          std::printf("K=%zu  probe %.4f  knn %.4f\n", row.bank_size, row.probe_accuracy,
                      row.knn_accuracy);
        else
          std::printf("K=%zu  FAILED: %s\n", row.bank_size, row.error.c_str());
      }
    } else if (*export_cmd) {
      const adco::ExperimentConfig config = make_config(config_path, overrides, seed);
      adco::run_export_embeddings(checkpoint_path, config, export_csv,
                                  export_split == "train", bank_path);
      std::cout << "wrote " << export_csv << "\n";
    } else if (*bench_cmd) {
      const adco::ExperimentConfig config = make_config(config_path, overrides, seed);
      const auto rows = adco::run_bench_baselines(config, out_dir);
      for (const auto& row : rows)
        std::printf("%-12s probe %.4f  knn %.4f  rows_changed [%zu, %zu]\n",
                    row.mode.c_str(), row.probe_accuracy, row.knn_accuracy,
                    row.min_rows_changed, row.max_rows_changed);
    }
  } catch (const adco::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
