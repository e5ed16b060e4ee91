#include "adco/optim.hpp"

#include <cmath>
#include <numbers>

#include "adco/errors.hpp"

namespace adco {

void SgdConfig::validate() const {
  if (!(lr_base >= 0.0)) throw ConfigError("sgd.lr_base must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sgd.momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("sgd.weight_decay must be >= 0");
}

void SgdState::step(const std::vector<Matrix*>& params,
                    const std::vector<const Matrix*>& grads, double lr_now) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: tensor count mismatch");
  if (!(lr_now >= 0.0)) throw ConfigError("sgd_step: lr_now must be >= 0");
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const Matrix* p : params) velocity_.emplace_back(p->rows(), p->cols());
  }
  if (velocity_.size() != params.size()) throw ShapeError("sgd_step: tensor count changed");

  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    const Matrix& g = *grads[t];
    Matrix& v = velocity_[t];
    if (!p.same_shape(g) || !p.same_shape(v)) throw ShapeError("sgd_step: shape mismatch");
    if (!g.all_finite()) throw NumericError("sgd_step: non-finite gradient");

    double* pd = p.data();
    const double* gd = g.data();
    double* vd = v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double effective = gd[i] + cfg_.weight_decay * pd[i];
      vd[i] = cfg_.momentum * vd[i] + effective;
      pd[i] -= lr_now * vd[i];
    }
  }
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_base) {
  if (total_steps < 1) throw ScheduleError("cosine_lr: total_steps must be >= 1");
  if (step > total_steps) throw ScheduleError("cosine_lr: step beyond total_steps");
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_base * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void sgd_update_encoder(MlpEncoder& encoder, SgdState& opt, const EncoderGrads& grads,
                        double lr_now) {
  std::vector<const Matrix*> grad_ptrs;
  grad_ptrs.reserve(grads.weights.size() * 2);
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    grad_ptrs.push_back(&grads.weights[l]);
    grad_ptrs.push_back(&grads.biases[l]);
  }
  opt.step(encoder.parameter_tensors(), grad_ptrs, lr_now);
  encoder.mark_mutated();
}

}  // namespace adco
