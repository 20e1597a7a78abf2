#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "jncf/loss/losses.hpp"

namespace jncf {

enum class PairwiseLoss { none, top1, top1max, bprmax };
enum class PointwiseLoss { none, log, squared };

std::string_view pairwise_name(PairwiseLoss p);
std::string_view pointwise_name(PointwiseLoss p);
PairwiseLoss parse_pairwise(std::string_view name);
PointwiseLoss parse_pointwise(std::string_view name);

// alpha * ranking + (1 - alpha) * point-wise. The ranking term is the
// selected pair-wise loss, or the softmax cross-entropy when listwise_xe is
// set (then pairwise must be none).
struct LossConfig {
  double alpha = 0.7;
  PairwiseLoss pairwise = PairwiseLoss::top1;
  PointwiseLoss pointwise = PointwiseLoss::log;
  bool listwise_xe = false;
  std::size_t negative_count = 1;
  double lambda_reg = 0.0;
  double instance_weight = 1.0;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// One positive (u, i, Y_ui) with its sampled negatives and their scores.
struct TrainingInstance {
  std::uint32_t user = 0;
  std::uint32_t positive_item = 0;
  double target = 1.0;  // Y_ui = y_ui / Max(R_u), or 1 for implicit feedback
  std::vector<std::uint32_t> negatives;
  double positive_score = 0.5;
  std::vector<double> negative_scores;
};

// Y_ui = rating / Max(R_u).
double normalized_target(double rating, double user_max_rating);

// Hybrid loss for one instance. The point-wise term is applied to the
// positive with target Y_ui and to each sampled negative with target 0.
loss::ScoreGradient hybrid_loss(const LossConfig& config, double target, double positive_score,
                                std::span<const double> negative_scores);
loss::ScoreGradient hybrid_loss(const LossConfig& config, const TrainingInstance& instance);

}  // namespace jncf
