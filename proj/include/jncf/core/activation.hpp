#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

namespace jncf {

enum class Activation { relu, sigmoid, identity };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

// Numerically stable logistic function; strictly inside (0,1) for |x| < ~36.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::identity:
      return x;
  }
  return x;
}

// d post / d pre, expressed through the cached pre/post values.
inline double activation_derivative(Activation a, double pre, double post) {
  switch (a) {
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return post * (1.0 - post);
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

// Pre/post activation values of one layer for one input.
struct LayerActivation {
  std::vector<double> pre_activation;
  std::vector<double> post_activation;
};

}  // namespace jncf
