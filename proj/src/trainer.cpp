#include "adco/trainer.hpp"

#include <cassert>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "adco/checkpoint.hpp"
#include "adco/errors.hpp"
#include "adco/numerics.hpp"

namespace adco {
namespace {

namespace fs = std::filesystem;

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  assert(ec == std::errc{});
  out.append(buf, ptr);
}

// Stream indices off the run seed; keep stable, they are part of the
// reproducibility contract.
constexpr std::uint64_t kEncoderStream = 0;
constexpr std::uint64_t kBankStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

Matrix augment_batch_view(const Matrix& batch, std::span<const std::size_t> item_ids,
                          const AugmentPolicy& policy, const SeededRng& epoch_aug_rng,
                          bool second_view) {
  Matrix view(batch.rows(), batch.cols());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto views = two_views(batch.row(r), policy, epoch_aug_rng.child(item_ids[r]));
    view.set_row(r, second_view ? views.second : views.first);
  }
  return view;
}

}  // namespace

void TrainLog::write_csv(const std::string& path, bool include_timing) const {
  std::ofstream out(path);
  if (!out) throw IoError("trainlog: cannot write " + path);
  out << "epoch,step,loss,lr_net,lr_adv,mean_nn_cosine,outlier_count,elapsed_ms\n";
  std::string line;
  for (const TrainRecord& r : records) {
    line.clear();
    line += std::to_string(r.epoch);
    line.push_back(',');
    line += std::to_string(r.step);
    line.push_back(',');
    append_double(line, r.loss);
    line.push_back(',');
    append_double(line, r.lr_net);
    line.push_back(',');
    append_double(line, r.lr_adv);
    line.push_back(',');
    append_double(line, r.mean_nn_cosine);
    line.push_back(',');
    line += std::to_string(r.outlier_count);
    line.push_back(',');
    append_double(line, include_timing ? r.elapsed_ms : 0.0);
    line.push_back('\n');
    out << line;
  }
  if (!out) throw IoError("trainlog: write failed for " + path);
}

InBatchGrads in_batch_loss_grads(const Matrix& queries, const Matrix& keys, double tau) {
  const std::size_t n = queries.rows();
  if (n < 2) throw ConfigError("in-batch negatives need a batch of at least 2");
  const double inv_n = 1.0 / static_cast<double>(n);

  InBatchGrads out;
  out.d_queries = Matrix(n, queries.cols());
  out.d_keys = Matrix(n, queries.cols());

  Matrix query_row(1, queries.cols());
  Matrix key_row(1, queries.cols());
  for (std::size_t i = 0; i < n; ++i) {
    query_row.set_row(0, queries.row(i));
    key_row.set_row(0, keys.row(i));
    const Matrix negs = in_batch_negatives(keys, i);
    const ContrastResult res = info_nce(query_row, key_row, negs, tau);
    out.loss += inv_n * res.loss;

    const QueryKeyGrads qk = query_grad(res, query_row, key_row, negs);
    const Matrix neg_grad = adversary_grad(res, query_row);
    auto dq = out.d_queries.row(i);
    auto dk = out.d_keys.row(i);
    for (std::size_t c = 0; c < queries.cols(); ++c) {
      dq[c] += inv_n * qk.d_queries.at(0, c);
      dk[c] += inv_n * qk.d_keys.at(0, c);
    }
    std::size_t neg_row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto dkj = out.d_keys.row(j);
      for (std::size_t c = 0; c < queries.cols(); ++c)
        dkj[c] += inv_n * neg_grad.at(neg_row, c);
      ++neg_row;
    }
  }
  return out;
}

EncoderGrads encoder_grads_for_views(const MlpEncoder& encoder, const ForwardTape& tape_a,
                                     const ForwardTape& tape_b, const Matrix& d_view_a,
                                     const Matrix& d_view_b, bool stop_gradient_key) {
  EncoderGrads grads = encoder.backward(tape_a, d_view_a);
  if (!stop_gradient_key) {
    const EncoderGrads key_grads = encoder.backward(tape_b, d_view_b);
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
      add_scaled(grads.weights[l], key_grads.weights[l], 1.0);
      add_scaled(grads.biases[l], key_grads.biases[l], 1.0);
    }
  }
  return grads;
}

std::unique_ptr<NegativeProvider> make_provider(const ExperimentConfig& config,
                                                const LabeledDataset& train_data,
                                                const MlpEncoder& encoder) {
  SeededRng bank_rng = SeededRng(config.seed).child(kBankStream);
  switch (config.negatives.mode) {
    case NegativesMode::adversarial:
      return std::make_unique<AdversarialProvider>(NegativeBank::init_from_encoder(
          train_data, encoder, config.negatives.bank_size, bank_rng));
    case NegativesMode::fifo: {
      // Warm-start with the same encoded random samples as the adversarial
      // bank so the two modes differ only in how negatives evolve.
      NegativeBank seed_bank = NegativeBank::init_from_encoder(
          train_data, encoder, config.negatives.bank_size, bank_rng);
      return std::make_unique<FifoProvider>(FifoQueue::warm(seed_bank.matrix()));
    }
    case NegativesMode::in_batch:
      return std::make_unique<InBatchProvider>();
  }
  throw ConfigError("unknown negatives mode");
}

StepOutcome train_step(MlpEncoder& encoder, NegativeProvider& provider,
                       const Matrix& batch, std::span<const std::size_t> item_ids,
                       const ExperimentConfig& config, SgdState& opt_net,
                       double lr_net_now, double lr_adv_now,
                       const SeededRng& epoch_aug_rng) {
  if (batch.rows() != item_ids.size())
    throw ShapeError("train_step: batch/item_ids size mismatch");

  // (1) two stochastic views of the batch
  const Matrix view_a =
      augment_batch_view(batch, item_ids, config.data.augment, epoch_aug_rng, false);
  const Matrix view_b =
      augment_batch_view(batch, item_ids, config.data.augment, epoch_aug_rng, true);

  // (2) forward both views
  ForwardTape tape_a, tape_b;
  const Matrix emb_a = encoder.forward(view_a, &tape_a);
  const Matrix emb_b = encoder.forward(view_b, &tape_b);

  // (3) encoder loss at tau_net and descent step
  StepOutcome outcome;
  Matrix d_view_a, d_view_b;
  const Matrix* bank = provider.negatives();
  if (provider.mode() == NegativesMode::in_batch) {
    if (config.loss.symmetric) {
      InBatchGrads fwd = in_batch_loss_grads(emb_a, emb_b, config.loss.tau_net);
      const InBatchGrads rev = in_batch_loss_grads(emb_b, emb_a, config.loss.tau_net);
      outcome.loss = 0.5 * (fwd.loss + rev.loss);
      d_view_a = std::move(fwd.d_queries);
      add_scaled(d_view_a, rev.d_keys, 1.0);
      scale(d_view_a, 0.5);
      d_view_b = std::move(fwd.d_keys);
      add_scaled(d_view_b, rev.d_queries, 1.0);
      scale(d_view_b, 0.5);
    } else {
      InBatchGrads g = in_batch_loss_grads(emb_a, emb_b, config.loss.tau_net);
      outcome.loss = g.loss;
      d_view_a = std::move(g.d_queries);
      d_view_b = std::move(g.d_keys);
    }
  } else if (config.loss.symmetric) {
    SymmetricResult res = symmetric_loss(emb_a, emb_b, *bank, config.loss.tau_net);
    outcome.loss = res.loss;
    d_view_a = std::move(res.d_view_a);
    d_view_b = std::move(res.d_view_b);
  } else {
    const ContrastResult res = info_nce(emb_a, emb_b, *bank, config.loss.tau_net);
    outcome.loss = res.loss;
    QueryKeyGrads qk = query_grad(res, emb_a, emb_b, *bank);
    d_view_a = std::move(qk.d_queries);
    d_view_b = std::move(qk.d_keys);
  }

  if (!std::isfinite(outcome.loss))
    throw NumericError("train_step: non-finite loss");

  const EncoderGrads grads = encoder_grads_for_views(encoder, tape_a, tape_b, d_view_a,
                                                     d_view_b, config.train.stop_gradient_key);
  sgd_update_encoder(encoder, opt_net, grads, lr_net_now);

  // (4) provider update. Assignment probabilities are recomputed at tau_adv;
  // by default the pre-update embeddings are reused (they are constants in
  // the adversary derivative), refresh_embeddings re-encodes instead.
  Matrix refreshed_a, refreshed_b;
  const Matrix* adv_a = &emb_a;
  const Matrix* adv_b = &emb_b;
  if (config.train.refresh_embeddings &&
      provider.mode() != NegativesMode::in_batch) {
    refreshed_a = encoder.forward(view_a);
    refreshed_b = encoder.forward(view_b);
    adv_a = &refreshed_a;
    adv_b = &refreshed_b;
  }

  if (provider.mode() == NegativesMode::adversarial) {
    Matrix bank_grad;
    if (config.loss.symmetric) {
      const ContrastResult fwd = info_nce(*adv_a, *adv_b, *bank, config.loss.tau_adv);
      const ContrastResult rev = info_nce(*adv_b, *adv_a, *bank, config.loss.tau_adv);
      bank_grad = adversary_grad(fwd, *adv_a);
      add_scaled(bank_grad, adversary_grad(rev, *adv_b), 1.0);
      scale(bank_grad, 0.5);
    } else {
      const ContrastResult res = info_nce(*adv_a, *adv_b, *bank, config.loss.tau_adv);
      bank_grad = adversary_grad(res, *adv_a);
    }
    ProviderUpdate update;
    update.bank_grad = &bank_grad;
    update.adversarial = config.negatives.update;
    update.adversarial.lr = lr_adv_now;
    outcome.rows_changed = provider.post_step(update);
  } else if (provider.mode() == NegativesMode::fifo) {
    ProviderUpdate update;
    update.batch_keys = adv_b;
    outcome.rows_changed = provider.post_step(update);
  }

  // coverage of the post-update negatives against this batch's queries
  const Matrix* coverage_bank =
      provider.mode() == NegativesMode::in_batch ? adv_b : provider.negatives();
  outcome.coverage = bank_coverage_stats(*coverage_bank, *adv_a);
  return outcome;
}

std::pair<LabeledDataset, LabeledDataset> load_split(const ExperimentConfig& config) {
  if (config.data.train_csv) {
    LabeledDataset train = load_csv(*config.data.train_csv);
    LabeledDataset test =
        config.data.test_csv ? load_csv(*config.data.test_csv) : train;
    if (train.dim() != config.encoder_dims.front())
      throw ConfigError("train CSV width does not match encoder input dim");
    if (test.dim() != train.dim()) throw ConfigError("test CSV width mismatch");
    const int classes = std::max(train.num_classes, test.num_classes);
    train.num_classes = classes;
    test.num_classes = classes;
    return {std::move(train), std::move(test)};
  }
  return gaussian_mixture_split(config.data.mixture, config.data.test_per_class,
                                config.seed);
}

PretrainResult pretrain(const ExperimentConfig& config) {
  return pretrain(config, load_split(config).first);
}

PretrainResult pretrain(const ExperimentConfig& config, const LabeledDataset& train_data,
                        const std::optional<std::string>& out_dir, bool include_timing) {
  config.validate();
  if (train_data.size() == 0) throw ConfigError("pretrain: empty training set");
  if (train_data.dim() != config.encoder_dims.front())
    throw ConfigError("pretrain: data dim does not match encoder input dim");

  SeededRng root(config.seed);
  PretrainResult result;
  result.encoder = MlpEncoder::init(config.encoder_dims, root.child(kEncoderStream));
  result.provider = make_provider(config, train_data, result.encoder);

  const std::size_t batch = static_cast<std::size_t>(config.train.batch_size);
  // batches of size 1 cannot feed the in-batch loss; drop the remainder in
  // every mode so budgets stay comparable
  const std::size_t m = train_data.size();
  std::vector<std::pair<std::size_t, std::size_t>> slices;  // (start, len) per step
  for (std::size_t start = 0; start < m; start += batch) {
    const std::size_t len = std::min(batch, m - start);
    if (len >= 2 || batch == 1) slices.emplace_back(start, len);
  }
  result.steps_per_epoch = slices.size();
  const std::size_t total_steps =
      slices.size() * static_cast<std::size_t>(config.train.epochs);

  SgdState opt_net(config.optimizer_net);
  const SeededRng aug_root = root.child(kAugmentStream);
  const SeededRng shuffle_root = root.child(kShuffleStream);

  auto write_checkpoints = [&](const std::string& dir, const std::string& suffix) {
    save_encoder(result.encoder, dir + "/encoder_" + suffix + ".ckpt");
    if (const Matrix* negs = result.provider->negatives())
      save_bank(*negs, dir + "/bank_" + suffix + ".ckpt");
  };

  if (out_dir) fs::create_directories(*out_dir);

  long global_step = 0;
  try {
    for (int epoch = 0; epoch < config.train.epochs; ++epoch) {
      const std::vector<std::size_t> order = epoch_order(m, shuffle_root.child(epoch));
      const SeededRng epoch_aug = aug_root.child(static_cast<std::uint64_t>(epoch));
      for (const auto& [start, len] : slices) {
        const auto t0 = std::chrono::steady_clock::now();
        Matrix batch_rows(len, train_data.dim());
        std::vector<std::size_t> ids(len);
        for (std::size_t i = 0; i < len; ++i) {
          ids[i] = order[start + i];
          batch_rows.set_row(i, train_data.samples.row(ids[i]));
        }
        const double lr_net =
            config.train.granularity == ScheduleGranularity::step
                ? cosine_lr(static_cast<std::size_t>(global_step), total_steps,
                            config.optimizer_net.lr_base)
                : cosine_lr(static_cast<std::size_t>(epoch),
                            static_cast<std::size_t>(config.train.epochs),
                            config.optimizer_net.lr_base);
        const double lr_adv =
            config.train.granularity == ScheduleGranularity::step
                ? cosine_lr(static_cast<std::size_t>(global_step), total_steps,
                            config.negatives.update.lr)
                : cosine_lr(static_cast<std::size_t>(epoch),
                            static_cast<std::size_t>(config.train.epochs),
                            config.negatives.update.lr);

        const StepOutcome outcome = train_step(result.encoder, *result.provider,
                                               batch_rows, ids, config, opt_net, lr_net,
                                               lr_adv, epoch_aug);
        const auto t1 = std::chrono::steady_clock::now();

        TrainRecord rec;
        rec.epoch = epoch;
        rec.step = global_step;
        rec.loss = outcome.loss;
        rec.lr_net = lr_net;
        rec.lr_adv = lr_adv;
        rec.mean_nn_cosine = outcome.coverage.mean_nn_cosine;
        rec.outlier_count = outcome.coverage.outlier_count;
        rec.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.rows_changed = outcome.rows_changed;
        result.log.records.push_back(rec);
        ++global_step;
      }
      if (out_dir && config.train.checkpoint_every_epochs > 0 &&
          (epoch + 1) % config.train.checkpoint_every_epochs == 0 &&
          epoch + 1 < config.train.epochs) {
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "epoch_%04d", epoch + 1);
        write_checkpoints(*out_dir, suffix);
      }
    }
  } catch (const Error&) {
    // preserve partial artifacts before the abort propagates
    if (out_dir) {
      result.log.write_csv(*out_dir + "/trainlog.csv", include_timing);
      write_checkpoints(*out_dir, "abort");
      std::ofstream diag(*out_dir + "/abort.txt");
      diag << "aborted at step " << global_step << " of " << total_steps << "\n";
    }
    throw;
  }

  if (out_dir) {
    result.log.write_csv(*out_dir + "/trainlog.csv", include_timing);
    write_checkpoints(*out_dir, "final");
  }
  return result;
}

}  // namespace adco
