#pragma once

#include <string>
#include <vector>

#include "adco/matrix.hpp"

namespace adco {

struct ProbeResult {
  double top1_accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_test_count;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<double> train_loss_history;  // one entry per epoch
};

struct ProbeConfig {
  int epochs = 100;
  double lr = 0.3;
};

// Multinomial logistic regression on frozen embeddings: full-batch gradient
// descent from zero init with a cosine-decayed learning rate. Deterministic.
ProbeResult linear_probe(const Matrix& train_embeddings, const std::vector<int>& train_labels,
                         const Matrix& test_embeddings, const std::vector<int>& test_labels,
                         const ProbeConfig& config = {});

// Cosine-similarity k nearest neighbours with majority vote; vote ties break
// to the smallest class index, similarity ties to the smallest train index.
double knn_accuracy(const Matrix& train_embeddings, const std::vector<int>& train_labels,
                    const Matrix& test_embeddings, const std::vector<int>& test_labels,
                    int k);

// CSV of embeddings + label column, loadable by load_csv. Bank exports use
// label -1 by convention.
void export_embeddings(const Matrix& embeddings, const std::vector<int>& labels,
                       const std::string& path);

}  // namespace adco
