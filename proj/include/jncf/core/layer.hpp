#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jncf/core/activation.hpp"
#include "jncf/core/parameter.hpp"

namespace jncf {

struct SparseEntry {
  std::uint32_t index;
  double value;
};

// Everything backward() needs from one forward() call.
struct LayerCache {
  std::vector<double> input;               // dense layers
  std::vector<SparseEntry> sparse_input;   // sparse-input layers
  LayerActivation activation;
  bool recorded = false;

  std::span<const double> output() const { return activation.post_activation; }
};

// Where backward() accumulates parameter gradients. Defaults to the layer's
// own Parameter::grad; worker threads pass private buffers instead.
struct LayerGradSink {
  std::span<double> weights;
  std::span<double> bias;
};

// Free-function form of a fully connected layer: out = f(W x + b).
LayerActivation dense_forward(const Parameter& weights, const Parameter& bias,
                              std::span<const double> input, Activation activation);

// Fully connected layer. With sparse_input=true the weight matrix is stored
// transposed (one contiguous column per input coordinate) so forward and
// backward touch only the columns of nonzero inputs; the logical shape is
// still output_dim x input_dim.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, std::size_t input_dim, std::size_t output_dim,
             Activation activation, bool sparse_input = false);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  Shape weight_shape() const { return {output_dim_, input_dim_}; }
  Activation activation() const { return activation_; }
  bool sparse_input() const { return sparse_input_; }
  const std::string& name() const { return name_; }

  Parameter& weights() { return weights_; }
  const Parameter& weights() const { return weights_; }
  Parameter& bias() { return bias_; }
  const Parameter& bias() const { return bias_; }

  // Logical element W(r, c) regardless of storage layout.
  double weight(std::size_t r, std::size_t c) const;
  double& weight(std::size_t r, std::size_t c);

  void forward(std::span<const double> input, LayerCache& cache) const;
  // Sparse path: entries must have index < input_dim.
  void forward(std::span<const SparseEntry> input, LayerCache& cache) const;

  // Accumulates (+=) weight/bias gradients into `sink`; writes dL/dinput into
  // input_grad when it is non-empty (not supported for sparse-input layers).
  void backward(const LayerCache& cache, std::span<const double> upstream,
                std::span<double> input_grad, LayerGradSink sink) const;
  void backward(const LayerCache& cache, std::span<const double> upstream,
                std::span<double> input_grad);

  LayerGradSink own_sink();

 private:
  void finish_forward(LayerCache& cache) const;

  std::string name_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  Activation activation_ = Activation::relu;
  bool sparse_input_ = false;
  Parameter weights_;
  Parameter bias_;
};

}  // namespace jncf

namespace jncf {

// Convenience wrapper: backward into the layer's own gradients, returning
// dL/dinput (empty for sparse-input layers).
std::vector<double> dense_backward(DenseLayer& layer, const LayerCache& cache,
                                   std::span<const double> upstream);

}  // namespace jncf
