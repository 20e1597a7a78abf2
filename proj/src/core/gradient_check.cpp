#include "jncf/core/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace jncf {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

std::vector<std::size_t> pick_coordinates(std::size_t n, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (limit != 0 && limit < n) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

void record(GradientCheckReport& report, const std::string& name, std::size_t index,
            double analytic, double numeric, double floor) {
  const double err = relative_error(analytic, numeric, floor);
  report.coordinates_checked += 1;
  if (report.coordinates_checked == 1 || err > report.max_rel_error) {
    report.max_rel_error = err;
    report.worst_parameter = name;
    report.worst_index = index;
    report.worst_analytic = analytic;
    report.worst_numeric = numeric;
  }
}

// Central difference of g around the current point; g(t) evaluates the loss
// with the coordinate shifted by t.
template <class Eval>
double central_difference(Eval&& g, double h, bool five_point) {
  const double d1 = g(h) - g(-h);
  if (!five_point) return d1 / (2.0 * h);
  const double d2 = g(2.0 * h) - g(-2.0 * h);
  return (8.0 * d1 - d2) / (12.0 * h);
}

}  // namespace

GradientCheckReport gradient_check(const std::function<double()>& loss,
                                   const std::function<void()>& compute_gradients,
                                   std::span<Parameter* const> params,
                                   const GradientCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  compute_gradients();

  GradientCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    for (std::size_t k : pick_coordinates(p->size(), options.max_coords_per_param, rng)) {
      const double original = p->value[k];
      const double numeric = central_difference(
          [&](double t) {
            p->value[k] = original + t;
            return loss();
          },
          options.step, options.five_point);
      p->value[k] = original;
      record(report, p->name, k, p->grad[k], numeric, options.floor);
    }
  }
  return report;
}

GradientCheckReport gradient_check(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> analytic_gradient,
                                   std::span<const double> point,
                                   const GradientCheckOptions& options) {
  GradientCheckReport report;
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double original = x[k];
    const double numeric = central_difference(
        [&](double t) {
          x[k] = original + t;
          return f(x);
        },
        options.step, options.five_point);
    x[k] = original;
    record(report, "x", k, analytic_gradient[k], numeric, options.floor);
  }
  return report;
}

}  // namespace jncf
