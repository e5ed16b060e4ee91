#pragma once

#include <cstddef>
#include <vector>

#include "adco/encoder.hpp"
#include "adco/matrix.hpp"

namespace adco {

struct SgdConfig {
  double lr_base = 0.03;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  void validate() const;
};

// SGD with momentum and weight decay over an ordered list of tensors:
//   g' = grad + weight_decay * param
//   v  = momentum * v + g'
//   param -= lr_now * v
// Velocity buffers are created on first step and must keep matching shapes.
class SgdState {
 public:
  explicit SgdState(SgdConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const SgdConfig& config() const { return cfg_; }

  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
            double lr_now);

 private:
  SgdConfig cfg_;
  std::vector<Matrix> velocity_;
};

// lr_base * 0.5 * (1 + cos(pi * step / total_steps)); step may equal
// total_steps (yields 0), beyond that is a ScheduleError.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr_base);

// Applies one SGD step to all encoder parameters and bumps its version.
void sgd_update_encoder(MlpEncoder& encoder, SgdState& opt, const EncoderGrads& grads,
                        double lr_now);

}  // namespace adco
