#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adco/matrix.hpp"
#include "adco/rng.hpp"

namespace adco {

struct LabeledDataset {
  Matrix samples;           // M x d
  std::vector<int> labels;  // values in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
  void validate() const;
};

// Vector-space stand-ins for image augmentation: per-view multiplicative
// scale, additive Gaussian jitter, and per-coordinate dropout.
struct AugmentPolicy {
  double jitter_sigma = 0.1;
  double scale_lo = 0.9;
  double scale_hi = 1.1;
  double dropout_prob = 0.0;

  void validate() const;
  bool is_identity() const {
    return jitter_sigma == 0.0 && scale_lo == 1.0 && scale_hi == 1.0 &&
           dropout_prob == 0.0;
  }
};

struct GaussianMixtureSpec {
  int num_classes = 8;
  int per_class = 500;
  int dim = 64;
  double cluster_sigma = 0.28;
  double separation = 1.0;  // radius of the sphere the class centers live on

  void validate() const;
};

// Class centers uniform on the sphere of radius `separation`, samples =
// center + N(0, sigma^2 I). Deterministic in seed.
LabeledDataset gaussian_mixture(const GaussianMixtureSpec& spec, std::uint64_t seed);

// Train and test sets sharing one set of class centers but with disjoint
// sample noise streams.
std::pair<LabeledDataset, LabeledDataset> gaussian_mixture_split(
    const GaussianMixtureSpec& spec, int test_per_class, std::uint64_t seed);

// Two independent stochastic augmentations of one sample. item_rng must be
// the per-item stream (derived from run seed, epoch, and dataset index), so
// the result is a pure function of (seed, item, view).
std::pair<std::vector<double>, std::vector<double>> two_views(
    std::span<const double> x, const AugmentPolicy& policy, const SeededRng& item_rng);

// CSV loader: d feature columns then an integer label column, no header by
// default. Malformed input reports the offending line number.
LabeledDataset load_csv(const std::string& path, bool skip_header = false);

// Writer matching load_csv's layout; doubles are printed shortest-round-trip.
void save_csv(const Matrix& features, const std::vector<int>& labels,
              const std::string& path);

// Deterministic permutation of [0, count) for one epoch.
std::vector<std::size_t> epoch_order(std::size_t count, SeededRng rng);

}  // namespace adco
