#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jncf/data/rating_matrix.hpp"
#include "jncf/eval/evaluator.hpp"

namespace jncf {

// Non-personalized: score(u, i) = number of train interactions of i.
class ItemPopModel : public Scorer {
 public:
  ItemPopModel() = default;
  explicit ItemPopModel(const RatingMatrix& train);
  // Same counts taken from the user-major orientation.
  static ItemPopModel from_user_rows(const RatingMatrix& train);

  double score(std::uint32_t user, std::uint32_t item) const;
  void score(std::uint32_t user, std::span<const std::uint32_t> items,
             std::span<double> out) const override;
  const std::vector<double>& counts() const { return counts_; }

 private:
  std::vector<double> counts_;
};

struct BprConfig {
  std::size_t factors = 64;
  std::size_t epochs = 50;
  double learning_rate = 0.01;
  double reg = 0.01;
  double init_stddev = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
};

// Matrix factorization trained with SGD on (u, i+, j-) triples to maximize
// ln sigmoid(x_ui - x_uj) - reg/2 * (|p_u|^2 + |q_i|^2 + |q_j|^2).
class BprMfModel : public Scorer {
 public:
  BprMfModel() = default;
  BprMfModel(std::size_t num_users, std::size_t num_items, std::size_t factors,
             double init_stddev, std::uint64_t seed);

  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }
  std::size_t factors() const { return factors_; }
  std::span<double> user_factors(std::uint32_t u) { return {users_.data() + u * factors_, factors_}; }
  std::span<double> item_factors(std::uint32_t i) { return {items_.data() + i * factors_, factors_}; }
  std::span<const double> user_factors(std::uint32_t u) const {
    return {users_.data() + u * factors_, factors_};
  }
  std::span<const double> item_factors(std::uint32_t i) const {
    return {items_.data() + i * factors_, factors_};
  }

  double score(std::uint32_t user, std::uint32_t item) const;
  void score(std::uint32_t user, std::span<const std::uint32_t> items,
             std::span<double> out) const override;

  // Triple objective to minimize: -ln sigmoid(x_ui - x_uj) + reg/2 * norms.
  double triple_loss(std::uint32_t u, std::uint32_t i, std::uint32_t j, double reg) const;
  // Gradient of triple_loss w.r.t. (p_u, q_i, q_j), each of length factors.
  void triple_gradient(std::uint32_t u, std::uint32_t i, std::uint32_t j, double reg,
                       std::span<double> d_user, std::span<double> d_pos,
                       std::span<double> d_neg) const;
  // One SGD step on a triple; returns the loss before the step.
  double sgd_step(std::uint32_t u, std::uint32_t i, std::uint32_t j, double learning_rate,
                  double reg);

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::size_t factors_ = 0;
  std::vector<double> users_;
  std::vector<double> items_;
};

struct BprEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
};

// Each epoch draws one triple per train interaction (positives shuffled,
// negatives uniform over unrated items). Throws NumericError on divergence.
BprMfModel bpr_train(const RatingMatrix& train, const BprConfig& config,
                     std::vector<BprEpoch>* log = nullptr);

// "JNCFBPR1" | u32 M | u32 N | u32 d | f64 user factors | f64 item factors | "END!"
void save_bpr(const BprMfModel& model, const std::filesystem::path& path);
BprMfModel load_bpr(const std::filesystem::path& path);

}  // namespace jncf
