#include "adco/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "adco/data.hpp"
#include "adco/errors.hpp"
#include "adco/numerics.hpp"
#include "adco/optim.hpp"

namespace adco {
namespace {

int count_classes(const std::vector<int>& labels) {
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw ConfigError("labels must be nonnegative");
    max_label = std::max(max_label, l);
  }
  return max_label + 1;
}

int argmax_class(std::span<const double> scores) {
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  return best;
}

}  // namespace

ProbeResult linear_probe(const Matrix& train_embeddings, const std::vector<int>& train_labels,
                         const Matrix& test_embeddings, const std::vector<int>& test_labels,
                         const ProbeConfig& config) {
  if (train_embeddings.rows() != train_labels.size() ||
      test_embeddings.rows() != test_labels.size())
    throw ShapeError("linear_probe: embedding/label count mismatch");
  if (train_embeddings.cols() != test_embeddings.cols())
    throw ShapeError("linear_probe: train/test dimension mismatch");
  if (config.epochs <= 0 || !(config.lr > 0.0))
    throw ConfigError("linear_probe: epochs and lr must be positive");

  const int num_classes = std::max(count_classes(train_labels), count_classes(test_labels));
  std::vector<std::size_t> train_per_class(num_classes, 0);
  for (int l : train_labels) ++train_per_class[l];
  for (int c = 0; c < num_classes; ++c)
    if (train_per_class[c] == 0)
      throw ConfigError("linear_probe: class " + std::to_string(c) +
                        " absent from training set");

  const std::size_t n = train_embeddings.rows();
  const std::size_t d = train_embeddings.cols();
  Matrix w(static_cast<std::size_t>(num_classes), d);
  std::vector<double> bias(num_classes, 0.0);

  ProbeResult result;
  result.train_count = n;
  result.test_count = test_embeddings.rows();
  result.train_loss_history.reserve(config.epochs);

  std::vector<double> logits(num_classes);
  Matrix grad_w(w.rows(), w.cols());
  std::vector<double> grad_b(num_classes);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr_now =
        cosine_lr(static_cast<std::size_t>(epoch), static_cast<std::size_t>(config.epochs),
                  config.lr);
    grad_w.fill(0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto x = train_embeddings.row(i);
      for (int c = 0; c < num_classes; ++c) logits[c] = dot(w.row(c), x) + bias[c];
      const auto probs = softmax_temp(logits, 1.0);
      loss -= std::log(std::max(probs[train_labels[i]], 1e-300));
      for (int c = 0; c < num_classes; ++c) {
        const double delta = probs[c] - (c == train_labels[i] ? 1.0 : 0.0);
        grad_b[c] += delta;
        auto gw = grad_w.row(c);
        for (std::size_t j = 0; j < d; ++j) gw[j] += delta * x[j];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.train_loss_history.push_back(loss * inv_n);
    for (std::size_t idx = 0; idx < grad_w.size(); ++idx)
      w.flat()[idx] -= lr_now * inv_n * grad_w.flat()[idx];
    for (int c = 0; c < num_classes; ++c) bias[c] -= lr_now * inv_n * grad_b[c];
  }

  result.per_class_accuracy.assign(num_classes, 0.0);
  result.per_class_test_count.assign(num_classes, 0);
  std::size_t correct = 0;
  std::vector<std::size_t> correct_per_class(num_classes, 0);
  for (std::size_t i = 0; i < test_embeddings.rows(); ++i) {
    auto x = test_embeddings.row(i);
    for (int c = 0; c < num_classes; ++c) logits[c] = dot(w.row(c), x) + bias[c];
    const int pred = argmax_class(logits);
    ++result.per_class_test_count[test_labels[i]];
    if (pred == test_labels[i]) {
      ++correct;
      ++correct_per_class[test_labels[i]];
    }
  }
  result.top1_accuracy = static_cast<double>(correct) / static_cast<double>(result.test_count);
  for (int c = 0; c < num_classes; ++c)
    result.per_class_accuracy[c] =
        result.per_class_test_count[c] == 0
            ? 0.0
            : static_cast<double>(correct_per_class[c]) /
                  static_cast<double>(result.per_class_test_count[c]);
  return result;
}

double knn_accuracy(const Matrix& train_embeddings, const std::vector<int>& train_labels,
                    const Matrix& test_embeddings, const std::vector<int>& test_labels,
                    int k) {
  if (train_embeddings.rows() != train_labels.size() ||
      test_embeddings.rows() != test_labels.size())
    throw ShapeError("knn_accuracy: embedding/label count mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > train_embeddings.rows())
    throw ConfigError("knn_accuracy: k must be in [1, train size]");

  const int num_classes = std::max(count_classes(train_labels), count_classes(test_labels));
  const std::size_t m = train_embeddings.rows();
  std::size_t correct = 0;
  std::vector<std::size_t> order(m);
  std::vector<double> sims(m);
  std::vector<int> votes(num_classes);

  for (std::size_t t = 0; t < test_embeddings.rows(); ++t) {
    for (std::size_t i = 0; i < m; ++i)
      sims[i] = dot(test_embeddings.row(t), train_embeddings.row(i));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (sims[a] != sims[b]) return sims[a] > sims[b];
                        return a < b;  // similarity tie: smallest train index
                      });
    std::fill(votes.begin(), votes.end(), 0);
    for (int j = 0; j < k; ++j) ++votes[train_labels[order[j]]];
    int pred = 0;
    for (int c = 1; c < num_classes; ++c)
      if (votes[c] > votes[pred]) pred = c;  // vote tie: smallest class index
    if (pred == test_labels[t]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_embeddings.rows());
}

void export_embeddings(const Matrix& embeddings, const std::vector<int>& labels,
                       const std::string& path) {
  save_csv(embeddings, labels, path);
}

}  // namespace adco
