#include "jncf/loss/hybrid.hpp"

#include <cmath>
#include <string>

#include "jncf/core/errors.hpp"

namespace jncf {

std::string_view pairwise_name(PairwiseLoss p) {
  switch (p) {
    case PairwiseLoss::none:
      return "none";
    case PairwiseLoss::top1:
      return "top1";
    case PairwiseLoss::top1max:
      return "top1max";
    case PairwiseLoss::bprmax:
      return "bprmax";
  }
  return "none";
}

std::string_view pointwise_name(PointwiseLoss p) {
  switch (p) {
    case PointwiseLoss::none:
      return "none";
    case PointwiseLoss::log:
      return "log";
    case PointwiseLoss::squared:
      return "squared";
  }
  return "none";
}

PairwiseLoss parse_pairwise(std::string_view name) {
  if (name == "none") return PairwiseLoss::none;
  if (name == "top1") return PairwiseLoss::top1;
  if (name == "top1max") return PairwiseLoss::top1max;
  if (name == "bprmax") return PairwiseLoss::bprmax;
  throw ConfigError("loss.pairwise: unknown value '" + std::string(name) +
                    "' (expected top1, top1max, bprmax or none)");
}

PointwiseLoss parse_pointwise(std::string_view name) {
  if (name == "none") return PointwiseLoss::none;
  if (name == "log") return PointwiseLoss::log;
  if (name == "squared") return PointwiseLoss::squared;
  throw ConfigError("loss.pointwise: unknown value '" + std::string(name) +
                    "' (expected log, squared or none)");
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("loss.alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  if (listwise_xe && pairwise != PairwiseLoss::none) {
    throw ConfigError("loss.listwise_xe requires loss.pairwise = none");
  }
  const bool has_ranking = listwise_xe || pairwise != PairwiseLoss::none;
  const bool has_point = pointwise != PointwiseLoss::none;
  if (!has_ranking && !has_point) {
    throw ConfigError("loss: at least one of loss.pairwise / loss.pointwise must be active");
  }
  if (alpha > 0.0 && !has_ranking) {
    throw ConfigError("loss.alpha > 0 needs a pair-wise (or listwise_xe) component");
  }
  if (alpha < 1.0 && !has_point) {
    throw ConfigError("loss.alpha < 1 needs a point-wise component");
  }
  if (negative_count < 1) throw ConfigError("loss.negative_count must be >= 1");
  if (!(lambda_reg >= 0.0)) throw ConfigError("loss.lambda_reg must be >= 0");
  if (!(instance_weight > 0.0)) throw ConfigError("loss.instance_weight must be > 0");
}

double normalized_target(double rating, double user_max_rating) {
  if (!(user_max_rating > 0.0)) {
    throw DataError("normalized_target: user has no positive rating in train");
  }
  return rating / user_max_rating;
}

loss::ScoreGradient hybrid_loss(const LossConfig& config, double target, double positive_score,
                                std::span<const double> negative_scores) {
  const double alpha = config.alpha;
  loss::ScoreGradient out;
  out.d_negatives.assign(negative_scores.size(), 0.0);

  const bool has_ranking = config.listwise_xe || config.pairwise != PairwiseLoss::none;
  if (has_ranking) {
    loss::ScoreGradient rank;
    if (config.listwise_xe) {
      rank = loss::xe_loss(positive_score, negative_scores);
    } else if (config.pairwise == PairwiseLoss::top1) {
      rank = loss::top1_loss(positive_score, negative_scores);
    } else if (config.pairwise == PairwiseLoss::top1max) {
      rank = loss::top1max_loss(positive_score, negative_scores);
    } else {
      rank = loss::bprmax_loss(positive_score, negative_scores);
    }
    out.value += alpha * rank.value;
    out.d_positive += alpha * rank.d_positive;
    for (std::size_t j = 0; j < negative_scores.size(); ++j) {
      out.d_negatives[j] += alpha * rank.d_negatives[j];
    }
  }

  if (config.pointwise != PointwiseLoss::none) {
    auto point = [&](double score, double y) {
      return config.pointwise == PointwiseLoss::log
                 ? loss::log_loss(score, y)
                 : loss::squared_loss(score, y, config.instance_weight);
    };
    double value = 0.0;
    const auto pos = point(positive_score, target);
    value += pos.value;
    out.d_positive += (1.0 - alpha) * pos.gradient;
    for (std::size_t j = 0; j < negative_scores.size(); ++j) {
      const auto neg = point(negative_scores[j], 0.0);
      value += neg.value;
      out.d_negatives[j] += (1.0 - alpha) * neg.gradient;
    }
    out.value += (1.0 - alpha) * value;
  }
  if (!std::isfinite(out.value)) {
    throw NumericError("hybrid_loss: non-finite loss value");
  }
  return out;
}

loss::ScoreGradient hybrid_loss(const LossConfig& config, const TrainingInstance& instance) {
  return hybrid_loss(config, instance.target, instance.positive_score, instance.negative_scores);
}

}  // namespace jncf
