#include "adco/encoder.hpp"

#include <cmath>
#include <string>

#include "adco/errors.hpp"
#include "adco/numerics.hpp"

namespace adco {

MlpEncoder MlpEncoder::init(const std::vector<std::size_t>& dims, SeededRng rng) {
  if (dims.size() < 2) throw ConfigError("encoder dims need at least input and output");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("encoder dims must be positive");

  MlpEncoder enc;
  enc.dims_ = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(dims[l], dims[l + 1]);
    SeededRng layer_rng = rng.child(l);
    for (double& v : w.flat()) v = stddev * layer_rng.next_gaussian();
    enc.weights_.push_back(std::move(w));
    enc.biases_.emplace_back(1, dims[l + 1], 0.0);
  }
  return enc;
}

MlpEncoder MlpEncoder::from_parameters(std::vector<std::size_t> dims,
                                       std::vector<Matrix> weights,
                                       std::vector<Matrix> biases) {
  if (dims.size() < 2 || weights.size() != dims.size() - 1 ||
      biases.size() != weights.size())
    throw ConfigError("from_parameters: tensor count does not match dims");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (weights[l].rows() != dims[l] || weights[l].cols() != dims[l + 1] ||
        biases[l].rows() != 1 || biases[l].cols() != dims[l + 1])
      throw ShapeError("from_parameters: tensor shape mismatch at layer " +
                       std::to_string(l));
  }
  MlpEncoder enc;
  enc.dims_ = std::move(dims);
  enc.weights_ = std::move(weights);
  enc.biases_ = std::move(biases);
  return enc;
}

std::size_t MlpEncoder::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += weights_[l].size() + biases_[l].size();
  return n;
}

Matrix MlpEncoder::forward(const Matrix& batch, ForwardTape* tape) const {
  if (batch.cols() != input_dim())
    throw ShapeError("forward: batch has width " + std::to_string(batch.cols()) +
                     ", encoder expects " + std::to_string(input_dim()));

  if (tape) {
    *tape = ForwardTape{};
    tape->input = batch;
    tape->encoder_version = version_;
  }

  Matrix x = batch;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = matmul(x, weights_[l]);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t c = 0; c < z.cols(); ++c) row[c] += biases_[l].at(0, c);
    }
    if (tape) tape->pre_activations.push_back(z);
    if (l + 1 < weights_.size()) {
      for (double& v : z.flat()) v = v > 0.0 ? v : 0.0;  // ReLU; subgradient 0 at 0
      if (tape) tape->activations.push_back(z);
    }
    x = std::move(z);
  }

  if (tape) tape->prenorm_norms.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const double n = norm(row);
    if (!(n >= kNormEps))
      throw DegenerateVector("forward: zero pre-normalization output at row " +
                             std::to_string(r));
    if (tape) tape->prenorm_norms[r] = n;
    for (double& v : row) v /= n;
  }
  if (tape) tape->embeddings = x;
  return x;
}

EncoderGrads MlpEncoder::backward(const ForwardTape& tape, const Matrix& grad_embeddings,
                                  Matrix* d_input) const {
  if (tape.encoder_version != version_)
    throw StaleTapeError("backward: encoder parameters changed since forward");
  if (!grad_embeddings.same_shape(tape.embeddings))
    throw ShapeError("backward: grad_embeddings shape mismatch");

  const std::size_t layers = weights_.size();
  EncoderGrads grads = zero_grads();

  // Normalization Jacobian: d(z/||z||) maps g to (g - (g.e)e)/||z||.
  Matrix g = grad_embeddings;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    auto grow = g.row(r);
    auto erow = tape.embeddings.row(r);
    const double radial = dot(grow, erow);
    const double inv_norm = 1.0 / tape.prenorm_norms[r];
    for (std::size_t c = 0; c < g.cols(); ++c)
      grow[c] = (grow[c] - radial * erow[c]) * inv_norm;
  }

  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      // ReLU mask from the stored pre-activation
      const Matrix& z = tape.pre_activations[l];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (z.flat()[i] <= 0.0) g.flat()[i] = 0.0;
    }
    const Matrix& layer_input = l == 0 ? tape.input : tape.activations[l - 1];
    grads.weights[l] = matmul_tn(layer_input, g);
    for (std::size_t c = 0; c < g.cols(); ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < g.rows(); ++r) s += g.at(r, c);
      grads.biases[l].at(0, c) = s;
    }
    if (l > 0 || d_input) g = matmul_nt(g, weights_[l]);
  }
  if (d_input) *d_input = std::move(g);
  return grads;
}

std::vector<Matrix*> MlpEncoder::parameter_tensors() {
  std::vector<Matrix*> tensors;
  tensors.reserve(weights_.size() * 2);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    tensors.push_back(&weights_[l]);
    tensors.push_back(&biases_[l]);
  }
  return tensors;
}

EncoderGrads MlpEncoder::zero_grads() const {
  EncoderGrads grads;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    grads.weights.emplace_back(weights_[l].rows(), weights_[l].cols());
    grads.biases.emplace_back(1, biases_[l].cols());
  }
  return grads;
}

}  // namespace adco
