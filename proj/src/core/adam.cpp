#include "jncf/core/adam.hpp"

#include <cmath>

#include "jncf/core/errors.hpp"
#include "jncf/simd/kernels.hpp"

namespace jncf {

void adam_step(Parameter& param, const AdamConfig& config, double grad_scale) {
  const auto g = param.grad.values();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(g[k])) {
      throw NumericError("non-finite gradient in parameter '" + param.name + "' at index " +
                         std::to_string(k));
    }
  }
  param.step_count += 1;
  const double t = static_cast<double>(param.step_count);
  simd::AdamCoefficients c{};
  c.learning_rate = config.learning_rate;
  c.beta1 = config.beta1;
  c.beta2 = config.beta2;
  c.epsilon = config.epsilon;
  c.bias_correction1 = 1.0 / (1.0 - std::pow(config.beta1, t));
  c.bias_correction2 = 1.0 / (1.0 - std::pow(config.beta2, t));
  c.grad_scale = grad_scale;
  simd::kernels().adam(param.value.data(), param.grad.data(), param.adam_m.data(),
                       param.adam_v.data(), param.size(), c);
}

}  // namespace jncf
