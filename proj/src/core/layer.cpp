#include "jncf/core/layer.hpp"

#include <algorithm>

#include "jncf/core/errors.hpp"
#include "jncf/simd/kernels.hpp"

namespace jncf {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

LayerActivation dense_forward(const Parameter& weights, const Parameter& bias,
                              std::span<const double> input, Activation activation) {
  const Shape ws = weights.shape();
  if (input.size() != ws.cols) {
    throw ShapeError("dense_forward: weights " + ws.str() + " vs input " +
                     Shape{input.size(), 1}.str());
  }
  if (bias.size() != ws.rows) {
    throw ShapeError("dense_forward: weights " + ws.str() + " vs bias " + bias.shape().str());
  }
  LayerActivation out;
  out.pre_activation.resize(ws.rows);
  out.post_activation.resize(ws.rows);
  simd::kernels().gemv(weights.value.data(), input.data(), bias.value.data(),
                       out.pre_activation.data(), ws.rows, ws.cols);
  for (std::size_t r = 0; r < ws.rows; ++r) {
    out.post_activation[r] = apply_activation(activation, out.pre_activation[r]);
  }
  return out;
}

DenseLayer::DenseLayer(std::string name, std::size_t input_dim, std::size_t output_dim,
                       Activation activation, bool sparse_input)
    : name_(std::move(name)),
      input_dim_(input_dim),
      output_dim_(output_dim),
      activation_(activation),
      sparse_input_(sparse_input),
      weights_(name_ + ".W", sparse_input ? input_dim : output_dim,
               sparse_input ? output_dim : input_dim),
      bias_(name_ + ".b", output_dim, 1) {
  if (input_dim == 0 || output_dim == 0) {
    throw ConfigError("layer " + name_ + ": widths must be >= 1 (got " +
                      std::to_string(output_dim) + "x" + std::to_string(input_dim) + ")");
  }
}

double DenseLayer::weight(std::size_t r, std::size_t c) const {
  return sparse_input_ ? weights_.value(c, r) : weights_.value(r, c);
}

double& DenseLayer::weight(std::size_t r, std::size_t c) {
  return sparse_input_ ? weights_.value(c, r) : weights_.value(r, c);
}

LayerGradSink DenseLayer::own_sink() {
  return {weights_.grad.values(), bias_.grad.values()};
}

void DenseLayer::finish_forward(LayerCache& cache) const {
  auto& act = cache.activation;
  act.post_activation.resize(output_dim_);
  for (std::size_t r = 0; r < output_dim_; ++r) {
    act.post_activation[r] = apply_activation(activation_, act.pre_activation[r]);
  }
  cache.recorded = true;
}

void DenseLayer::forward(std::span<const double> input, LayerCache& cache) const {
  if (input.size() != input_dim_) {
    throw ShapeError("layer " + name_ + ": weights " + weight_shape().str() + " vs input " +
                     Shape{input.size(), 1}.str());
  }
  auto& pre = cache.activation.pre_activation;
  pre.resize(output_dim_);
  if (sparse_input_) {
    cache.sparse_input.clear();
    for (std::size_t c = 0; c < input.size(); ++c) {
      if (input[c] != 0.0) cache.sparse_input.push_back({static_cast<std::uint32_t>(c), input[c]});
    }
    cache.input.clear();
    forward(std::span<const SparseEntry>(cache.sparse_input), cache);
    return;
  }
  cache.input.assign(input.begin(), input.end());
  simd::kernels().gemv(weights_.value.data(), input.data(), bias_.value.data(), pre.data(),
                       output_dim_, input_dim_);
  finish_forward(cache);
}

void DenseLayer::forward(std::span<const SparseEntry> input, LayerCache& cache) const {
  if (!sparse_input_) {
    throw StateError("layer " + name_ + " was not built for sparse input");
  }
  auto& pre = cache.activation.pre_activation;
  pre.assign(bias_.value.values().begin(), bias_.value.values().end());
  const auto& k = simd::kernels();
  for (const auto& e : input) {
    if (e.index >= input_dim_) {
      throw ShapeError("layer " + name_ + ": weights " + weight_shape().str() +
                       " vs sparse input index " + std::to_string(e.index));
    }
    k.axpy(e.value, weights_.value.data() + std::size_t{e.index} * output_dim_, pre.data(),
           output_dim_);
  }
  if (cache.sparse_input.data() != input.data()) {
    cache.sparse_input.assign(input.begin(), input.end());
  }
  cache.input.clear();
  finish_forward(cache);
}

void DenseLayer::backward(const LayerCache& cache, std::span<const double> upstream,
                          std::span<double> input_grad, LayerGradSink sink) const {
  if (!cache.recorded) {
    throw StateError("layer " + name_ + ": backward called without a recorded forward pass");
  }
  if (upstream.size() != output_dim_) {
    throw ShapeError("layer " + name_ + ": upstream gradient " +
                     Shape{upstream.size(), 1}.str() + " vs output " +
                     Shape{output_dim_, 1}.str());
  }
  const auto& pre = cache.activation.pre_activation;
  const auto& post = cache.activation.post_activation;
  std::vector<double> delta(output_dim_);
  bool any = false;
  for (std::size_t r = 0; r < output_dim_; ++r) {
    delta[r] = upstream[r] * activation_derivative(activation_, pre[r], post[r]);
    any = any || delta[r] != 0.0;
  }
  for (std::size_t r = 0; r < output_dim_; ++r) sink.bias[r] += delta[r];

  const auto& k = simd::kernels();
  if (sparse_input_) {
    if (!input_grad.empty()) {
      throw StateError("layer " + name_ + ": input gradient not available for sparse input");
    }
    if (!any) return;
    for (const auto& e : cache.sparse_input) {
      k.axpy(e.value, delta.data(), sink.weights.data() + std::size_t{e.index} * output_dim_,
             output_dim_);
    }
    return;
  }
  if (!input_grad.empty()) {
    if (input_grad.size() != input_dim_) {
      throw ShapeError("layer " + name_ + ": input gradient buffer " +
                       Shape{input_grad.size(), 1}.str() + " vs input " +
                       Shape{input_dim_, 1}.str());
    }
    std::fill(input_grad.begin(), input_grad.end(), 0.0);
    if (any) k.gemv_t_acc(weights_.value.data(), delta.data(), input_grad.data(), output_dim_,
                          input_dim_);
  }
  if (any) {
    k.ger_acc(delta.data(), cache.input.data(), sink.weights.data(), output_dim_, input_dim_);
  }
}

void DenseLayer::backward(const LayerCache& cache, std::span<const double> upstream,
                          std::span<double> input_grad) {
  backward(cache, upstream, input_grad, own_sink());
}

}  // namespace jncf

namespace jncf {

std::vector<double> dense_backward(DenseLayer& layer, const LayerCache& cache,
                                   std::span<const double> upstream) {
  std::vector<double> input_grad(layer.sparse_input() ? 0 : layer.input_dim());
  layer.backward(cache, upstream, input_grad);
  return input_grad;
}

}  // namespace jncf
