#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace jncf::loss {

// Scores are clamped to [kScoreEpsilon, 1 - kScoreEpsilon] before any log.
inline constexpr double kScoreEpsilon = 1e-12;
// Lower bound for the BPR-max inner sum before the log.
inline constexpr double kBprMaxFloor = 1e-300;

// Loss value for one positive and its sampled negatives, with the partial
// derivatives with respect to every score.
struct ScoreGradient {
  double value = 0.0;
  double d_positive = 0.0;
  std::vector<double> d_negatives;
};

struct PointwiseResult {
  double value = 0.0;
  double gradient = 0.0;  // d value / d prediction
};

// -(Y log y + (1 - Y) log(1 - y)), y clamped.
PointwiseResult log_loss(double prediction, double target);
// w (y - prediction)^2
PointwiseResult squared_loss(double prediction, double target, double weight = 1.0);

// mean_j [ sig(y_j - y_i) + sig(y_j^2) ]
ScoreGradient top1_loss(double positive, std::span<const double> negatives);
// sum_j s_j [ sig(y_j - y_i) + sig(y_j^2) ], s = softmax(negatives)
ScoreGradient top1max_loss(double positive, std::span<const double> negatives);
// -log sum_j s_j sig(y_i - y_j)
ScoreGradient bprmax_loss(double positive, std::span<const double> negatives);
// -log( e^{y_i} / (e^{y_i} + sum_j e^{y_j}) )
ScoreGradient xe_loss(double positive, std::span<const double> negatives);

// Max-shifted softmax; sums to 1.
std::vector<double> softmax_scores(std::span<const double> scores);

}  // namespace jncf::loss
