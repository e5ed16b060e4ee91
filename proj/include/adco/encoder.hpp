#pragma once

#include <cstdint>
#include <vector>

#include "adco/matrix.hpp"
#include "adco/rng.hpp"

namespace adco {

// Per-layer caches from one forward pass, consumed by at most one backward
// pass. Tied to the encoder parameter version at the time of the forward;
// backward on a mutated encoder raises StaleTapeError.
struct ForwardTape {
  Matrix input;                          // N x d_in
  std::vector<Matrix> pre_activations;   // z_l per layer, N x d_l
  std::vector<Matrix> activations;       // relu(z_l) for hidden layers
  Matrix embeddings;                     // normalized output, N x d_emb
  std::vector<double> prenorm_norms;     // ||z_last|| per row
  std::uint64_t encoder_version = 0;
};

// Gradients aligned with MlpEncoder::weights()/biases().
struct EncoderGrads {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;  // stored as 1 x d rows
};

// Fully-connected encoder with ReLU hidden layers and an l2-normalized
// output. Weights are (d_in x d_out) so a batch forward is x*W + b; biases
// are kept as 1 x d matrices so the optimizer sees a uniform tensor list.
class MlpEncoder {
 public:
  MlpEncoder() = default;

  // Weights drawn zero-mean Gaussian with stddev 1/sqrt(fan_in), biases zero.
  static MlpEncoder init(const std::vector<std::size_t>& dims, SeededRng rng);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t embed_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t parameter_count() const;

  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Matrix>& biases() const { return biases_; }

  // Embeds a batch; every output row has unit norm. Pass a tape to enable a
  // later backward call.
  Matrix forward(const Matrix& batch, ForwardTape* tape = nullptr) const;

  // Derivative of sum(grad_embeddings . embeddings) with respect to every
  // parameter, including the normalization Jacobian. Also returns the
  // derivative with respect to the input batch when d_input is non-null.
  EncoderGrads backward(const ForwardTape& tape, const Matrix& grad_embeddings,
                        Matrix* d_input = nullptr) const;

  // Mutable access for the optimizer; both bump the parameter version.
  std::vector<Matrix*> parameter_tensors();
  void mark_mutated() { ++version_; }
  std::uint64_t version() const { return version_; }

  // Construction from raw tensors (checkpoint loading).
  static MlpEncoder from_parameters(std::vector<std::size_t> dims,
                                    std::vector<Matrix> weights,
                                    std::vector<Matrix> biases);

  EncoderGrads zero_grads() const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<Matrix> weights_;  // layer l: dims_[l] x dims_[l+1]
  std::vector<Matrix> biases_;   // layer l: 1 x dims_[l+1]
  std::uint64_t version_ = 0;
};

}  // namespace adco
