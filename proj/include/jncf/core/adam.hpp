#pragma once

#include "jncf/core/parameter.hpp"

namespace jncf {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update from param.grad * grad_scale, then zeroes
// the gradient and bumps step_count. Throws NumericError naming the
// parameter if any gradient entry is NaN/Inf (the value is left untouched).
void adam_step(Parameter& param, const AdamConfig& config, double grad_scale = 1.0);

}  // namespace jncf
