#include "jncf/loss/losses.hpp"

#include <algorithm>
#include <cmath>

#include "jncf/core/activation.hpp"
#include "jncf/core/errors.hpp"

namespace jncf::loss {

namespace {

double clamp_score(double y) { return std::clamp(y, kScoreEpsilon, 1.0 - kScoreEpsilon); }

double sigmoid_grad(double s) { return s * (1.0 - s); }

void require_negatives(std::span<const double> negatives, const char* who) {
  if (negatives.empty()) {
    throw ConfigError(std::string(who) + ": the negative sample set is empty");
  }
}

}  // namespace

PointwiseResult log_loss(double prediction, double target) {
  const double y = clamp_score(prediction);
  PointwiseResult r;
  r.value = -(target * std::log(y) + (1.0 - target) * std::log(1.0 - y));
  r.gradient = -target / y + (1.0 - target) / (1.0 - y);
  return r;
}

PointwiseResult squared_loss(double prediction, double target, double weight) {
  const double diff = target - prediction;
  return {weight * diff * diff, -2.0 * weight * diff};
}

std::vector<double> softmax_scores(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out[j] = std::exp(scores[j] - top);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
  return out;
}

ScoreGradient top1_loss(double positive, std::span<const double> negatives) {
  require_negatives(negatives, "top1_loss");
  const double inv_n = 1.0 / static_cast<double>(negatives.size());
  ScoreGradient g;
  g.d_negatives.resize(negatives.size());
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    const double yj = negatives[j];
    const double a = sigmoid(yj - positive);
    const double b = sigmoid(yj * yj);
    g.value += a + b;
    g.d_positive -= sigmoid_grad(a);
    g.d_negatives[j] = (sigmoid_grad(a) + 2.0 * yj * sigmoid_grad(b)) * inv_n;
  }
  g.value *= inv_n;
  g.d_positive *= inv_n;
  return g;
}

ScoreGradient top1max_loss(double positive, std::span<const double> negatives) {
  require_negatives(negatives, "top1max_loss");
  const auto s = softmax_scores(negatives);
  const std::size_t n = negatives.size();
  std::vector<double> f(n), df(n);
  ScoreGradient g;
  g.d_negatives.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double yj = negatives[j];
    const double a = sigmoid(yj - positive);
    const double b = sigmoid(yj * yj);
    f[j] = a + b;
    df[j] = sigmoid_grad(a) + 2.0 * yj * sigmoid_grad(b);
    g.value += s[j] * f[j];
    g.d_positive -= s[j] * sigmoid_grad(a);
  }
  // d s_j / d y_k = s_j (delta_jk - s_k)
  for (std::size_t k = 0; k < n; ++k) {
    g.d_negatives[k] = s[k] * df[k] + s[k] * (f[k] - g.value);
  }
  return g;
}

ScoreGradient bprmax_loss(double positive, std::span<const double> negatives) {
  require_negatives(negatives, "bprmax_loss");
  const auto s = softmax_scores(negatives);
  const std::size_t n = negatives.size();
  std::vector<double> gj(n);
  double inner = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    gj[j] = sigmoid(positive - negatives[j]);
    inner += s[j] * gj[j];
  }
  inner = std::max(inner, kBprMaxFloor);
  ScoreGradient g;
  g.value = -std::log(inner);
  g.d_negatives.resize(n);
  double d_inner_pos = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    d_inner_pos += s[k] * sigmoid_grad(gj[k]);
    const double d_inner_k = -s[k] * sigmoid_grad(gj[k]) + s[k] * (gj[k] - inner);
    g.d_negatives[k] = -d_inner_k / inner;
  }
  g.d_positive = -d_inner_pos / inner;
  return g;
}

ScoreGradient xe_loss(double positive, std::span<const double> negatives) {
  require_negatives(negatives, "xe_loss");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(positive);
  logits.insert(logits.end(), negatives.begin(), negatives.end());
  const auto p = softmax_scores(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  ScoreGradient g;
  g.value = top + std::log(sum) - positive;
  g.d_positive = p[0] - 1.0;
  g.d_negatives.assign(p.begin() + 1, p.end());
  return g;
}

}  // namespace jncf::loss
