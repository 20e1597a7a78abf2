#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "jncf/core/layer.hpp"
#include "jncf/data/rating_matrix.hpp"
#include "jncf/data/split.hpp"

namespace jncf {

enum class FusionMode { concat, multiply };

std::string_view fusion_name(FusionMode f);
FusionMode parse_fusion(std::string_view name);
std::string_view feedback_name(FeedbackMode f);
FeedbackMode parse_feedback(std::string_view name);

// Widths top, top/2, top/4, ... (never below 1) for depth sweeps.
std::vector<std::size_t> halving_widths(std::size_t top, std::size_t layers);

struct TowerConfig {
  std::vector<std::size_t> layer_sizes;
  std::size_t input_dim = 0;
};

struct ModelConfig {
  std::vector<std::size_t> user_layers{256, 128, 64};
  std::vector<std::size_t> item_layers{256, 128, 64};
  std::vector<std::size_t> di_layers{128, 8};
  FusionMode fusion = FusionMode::concat;
  FeedbackMode feedback = FeedbackMode::explicit_ratings;
  double init_stddev = 0.01;

  // Width contract between towers, fusion and DI stack; throws ConfigError
  // naming the two incompatible layers.
  void validate() const;
  std::size_t fused_width() const;
};

// Concatenation [z_u; z_i] or elementwise product z_u * z_i.
std::vector<double> fuse(std::span<const double> user_features,
                         std::span<const double> item_features, FusionMode mode);

// Per-layer caches of one tower pass.
struct TowerTrace {
  std::vector<LayerCache> layers;
  std::span<const double> output() const { return layers.back().output(); }
};

// Fusion, DI stack and output head for one (u, i) pair.
struct HeadTrace {
  std::vector<double> user_features;
  std::vector<double> item_features;
  std::vector<double> fused;
  std::vector<LayerCache> di;
  double logit = 0.0;
  double score = 0.5;
};

struct ForwardTrace {
  TowerTrace user;
  TowerTrace item;
  HeadTrace head;
  double score() const { return head.score; }
};

// Gradient destinations, one span per parameter in JNCFModel::parameters()
// order.
using GradientTarget = std::vector<std::span<double>>;

// Owned gradient storage shaped like a model's parameters (for worker
// threads).
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(const std::vector<std::size_t>& sizes);
  GradientTarget target();
  void zero();
  const std::vector<std::vector<double>>& data() const { return buffers_; }

 private:
  std::vector<std::vector<double>> buffers_;
};

class JNCFModel {
 public:
  JNCFModel() = default;
  // Weights ~ N(0, init_stddev^2) from `seed`, biases zero, h ~ N(0, init_stddev^2).
  JNCFModel(const ModelConfig& config, std::size_t num_users, std::size_t num_items,
            std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t feature_width() const { return user_tower_.back().output_dim(); }

  const std::vector<DenseLayer>& user_tower() const { return user_tower_; }
  const std::vector<DenseLayer>& item_tower() const { return item_tower_; }
  const std::vector<DenseLayer>& di_stack() const { return di_stack_; }
  std::vector<DenseLayer>& user_tower() { return user_tower_; }
  std::vector<DenseLayer>& item_tower() { return item_tower_; }
  std::vector<DenseLayer>& di_stack() { return di_stack_; }
  const Parameter& output_weights() const { return h_; }
  Parameter& output_weights() { return h_; }

  // user tower (W, b per layer), item tower, DI stack, h.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<std::size_t> parameter_sizes() const;
  GradientTarget own_gradients();

  // Tower passes over the rating rows of `train` (binarized in implicit mode).
  void user_forward(const RatingMatrix& train, std::uint32_t user, TowerTrace& trace) const;
  void item_forward(const RatingMatrix& train, std::uint32_t item, TowerTrace& trace) const;
  // Same towers over an explicit input vector (length N for users, M for items).
  void user_forward(std::span<const double> input, TowerTrace& trace) const;
  void item_forward(std::span<const double> input, TowerTrace& trace) const;
  // Tower pass without the first-layer sparse path (reference for tests).
  std::vector<double> user_forward_dense(std::span<const double> input) const;

  double head_forward(std::span<const double> user_features,
                      std::span<const double> item_features, HeadTrace& trace) const;
  // Score from precomputed tower outputs, no trace kept.
  double score_features(std::span<const double> user_features,
                        std::span<const double> item_features) const;

  double predict(const RatingMatrix& train, std::uint32_t user, std::uint32_t item) const;
  double predict(const RatingMatrix& train, std::uint32_t user, std::uint32_t item,
                 ForwardTrace& trace) const;

  // Backprop dL/dscore through head, DI and fusion; parameter grads go to
  // `grads`, feature grads are accumulated (+=) into d_user / d_item.
  void head_backward(const HeadTrace& trace, double d_score, GradientTarget& grads,
                     std::span<double> d_user, std::span<double> d_item) const;
  void user_backward(const TowerTrace& trace, std::span<const double> d_features,
                     GradientTarget& grads) const;
  void item_backward(const TowerTrace& trace, std::span<const double> d_features,
                     GradientTarget& grads) const;
  // Full backward for one traced prediction.
  void backward(const ForwardTrace& trace, double d_score, GradientTarget& grads) const;

  // Row-major tower outputs for every user (M x d) / item (N x d).
  std::vector<double> all_user_features(const RatingMatrix& train) const;
  std::vector<double> all_item_features(const RatingMatrix& train) const;

  std::size_t user_param_begin() const { return 0; }
  std::size_t item_param_begin() const { return 2 * user_tower_.size(); }
  std::size_t di_param_begin() const { return item_param_begin() + 2 * item_tower_.size(); }
  std::size_t h_param_index() const { return di_param_begin() + 2 * di_stack_.size(); }

 private:
  void tower_forward_sparse(const std::vector<DenseLayer>& tower,
                            std::span<const RatingEntry> row, TowerTrace& trace) const;
  void tower_forward_dense(const std::vector<DenseLayer>& tower, std::span<const double> input,
                           TowerTrace& trace) const;
  void tower_backward(const std::vector<DenseLayer>& tower, std::size_t param_offset,
                      const TowerTrace& trace, std::span<const double> d_features,
                      GradientTarget& grads) const;

  ModelConfig config_;
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<DenseLayer> user_tower_;
  std::vector<DenseLayer> item_tower_;
  std::vector<DenseLayer> di_stack_;
  Parameter h_;
};

// Little-endian binary checkpoint:
//   "JNCFCKPT" | u32 version | u32 M | u32 N | u8 fusion | u8 feedback |
//   f64 init_stddev | 3 x (u32 count, count x u32 width) |
//   u32 parameter count | per parameter: u32 rows, u32 cols, f64[rows*cols] |
//   "END!"
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_model(const JNCFModel& model, const std::filesystem::path& path);
JNCFModel load_model(const std::filesystem::path& path);

}  // namespace jncf
