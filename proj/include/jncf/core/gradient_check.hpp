#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "jncf/core/parameter.hpp"

namespace jncf {

struct GradientCheckOptions {
  double step = 1e-5;
  // Fourth-order stencil (x +- h, x +- 2h); needed where curvature is large,
  // e.g. log terms near 0 or 1.
  bool five_point = false;
  // Gradients smaller than this in magnitude are compared on an absolute
  // scale: rel = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
  // Coordinates checked per parameter; 0 checks all of them.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 1;
};

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

double relative_error(double analytic, double numeric, double floor);

// Compares param.grad (filled by `compute_gradients`, which must start from
// zeroed grads) with central differences of `loss` around the current values.
// Parameter values are restored exactly afterwards.
GradientCheckReport gradient_check(const std::function<double()>& loss,
                                   const std::function<void()>& compute_gradients,
                                   std::span<Parameter* const> params,
                                   const GradientCheckOptions& options = {});

// Same check for a plain function of a vector with its analytic gradient.
GradientCheckReport gradient_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> analytic_gradient, std::span<const double> point,
    const GradientCheckOptions& options = {});

}  // namespace jncf
