#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jncf/core/adam.hpp"
#include "jncf/core/errors.hpp"
#include "jncf/core/gradient_check.hpp"
#include "jncf/core/layer.hpp"
#include "jncf/loss/losses.hpp"

namespace {

using namespace jncf;

Parameter make_param(const char* name, std::size_t rows, std::size_t cols,
                     std::vector<double> values) {
  Parameter p(name, rows, cols);
  std::copy(values.begin(), values.end(), p.value.values().begin());
  return p;
}

TEST(DenseForward, IdentityWeightsWithRelu) {
  auto w = make_param("W", 2, 2, {1, 0, 0, 1});
  auto b = make_param("b", 2, 1, {0, 0});
  const std::vector<double> x{3, -2};
  const auto a = dense_forward(w, b, x, Activation::relu);
  EXPECT_EQ(a.post_activation, (std::vector<double>{3, 0}));
  EXPECT_EQ(a.pre_activation, (std::vector<double>{3, -2}));
}

TEST(DenseForward, SigmoidOfZero) {
  auto w = make_param("W", 1, 2, {0, 0});
  auto b = make_param("b", 1, 1, {0});
  const std::vector<double> x{5, 7};
  EXPECT_EQ(dense_forward(w, b, x, Activation::sigmoid).post_activation[0], 0.5);
}

TEST(DenseForward, IdentityHandEvaluation) {
  auto w = make_param("W", 1, 2, {2, 1});
  auto b = make_param("b", 1, 1, {1});
  const std::vector<double> x{1, 1};
  EXPECT_EQ(dense_forward(w, b, x, Activation::identity).post_activation[0], 4.0);
}

TEST(DenseForward, ShapeMismatchNamesBothShapes) {
  auto w = make_param("W", 1, 2, {2, 1});
  auto b = make_param("b", 1, 1, {1});
  const std::vector<double> x{1, 1, 1};
  try {
    dense_forward(w, b, x, Activation::identity);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1x2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3x1"), std::string::npos) << msg;
  }
}

TEST(DenseBackward, LinearChainRule) {
  DenseLayer layer("l", 1, 1, Activation::identity);
  layer.weights().value[0] = 1.0;
  LayerCache cache;
  const std::vector<double> x{2.0};
  layer.forward(x, cache);
  const std::vector<double> up{1.0};
  const auto in_grad = dense_backward(layer, cache, up);
  EXPECT_EQ(layer.weights().grad[0], 2.0);
  EXPECT_EQ(layer.bias().grad[0], 1.0);
  EXPECT_EQ(in_grad, std::vector<double>{1.0});
  // Accumulates rather than overwrites.
  dense_backward(layer, cache, up);
  EXPECT_EQ(layer.weights().grad[0], 4.0);
}

TEST(DenseBackward, ReluGateBlocksNegativePreActivation) {
  DenseLayer layer("l", 1, 1, Activation::relu);
  layer.weights().value[0] = -1.0;
  LayerCache cache;
  const std::vector<double> x{1.0};
  layer.forward(x, cache);
  ASSERT_EQ(cache.activation.pre_activation[0], -1.0);
  const auto in_grad = dense_backward(layer, cache, std::vector<double>{5.0});
  EXPECT_EQ(in_grad[0], 0.0);
  EXPECT_EQ(layer.weights().grad[0], 0.0);
}

TEST(DenseBackward, WithoutForwardIsStateError) {
  DenseLayer layer("l", 2, 1, Activation::relu);
  LayerCache cache;
  EXPECT_THROW(dense_backward(layer, cache, std::vector<double>{1.0}), StateError);
}

TEST(Activation, Ranges) {
  for (double x : {-1e6, -40.0, -1.0, 0.0, 1e-9, 3.0, 40.0, 1e6}) {
    EXPECT_GE(apply_activation(Activation::relu, x), 0.0);
    const double s = sigmoid(x);
    if (std::abs(x) < 30) {
      EXPECT_GT(s, 0.0);
      EXPECT_LT(s, 1.0);
    }
    EXPECT_TRUE(std::isfinite(s));
  }
  EXPECT_EQ(sigmoid(0.0), 0.5);
}

// Random 3x4 (and other) layers against central differences, 100 points per
// activation and input path.
struct LayerCase {
  Activation activation;
  bool sparse;
};

class LayerGradient : public ::testing::TestWithParam<LayerCase> {};

TEST_P(LayerGradient, MatchesFiniteDifferences) {
  const auto [activation, sparse] = GetParam();
  std::mt19937_64 rng(42 + static_cast<int>(activation) * 2 + sparse);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t in = 4, out = 3;
  DenseLayer layer("l", in, out, activation, sparse);
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    for (auto* p : {&layer.weights(), &layer.bias()}) {
      for (double& v : p->value.values()) v = normal(rng);
    }
    std::vector<double> x(in);
    for (double& v : x) v = normal(rng);
    std::vector<SparseEntry> sx;
    for (std::uint32_t k = 0; k < in; ++k) {
      if (k != 1) sx.push_back({k, x[k]});  // keep one coordinate implicit zero
    }
    if (sparse) x[1] = 0.0;
    std::vector<double> c(out);
    for (double& v : c) v = normal(rng);

    LayerCache cache;
    auto forward = [&] {
      if (sparse) {
        layer.forward(std::span<const SparseEntry>(sx), cache);
      } else {
        layer.forward(std::span<const double>(x), cache);
      }
    };
    auto loss = [&] {
      forward();
      double s = 0.0;
      for (std::size_t k = 0; k < out; ++k) s += c[k] * cache.output()[k];
      return s;
    };
    auto grads = [&] {
      forward();
      layer.backward(cache, c, {});
    };
    Parameter* params[] = {&layer.weights(), &layer.bias()};
    const auto report = gradient_check(loss, grads, params);
    worst = std::max(worst, report.max_rel_error);
    ASSERT_LT(report.max_rel_error, 1e-4) << report.worst_parameter << "[" << report.worst_index
                                          << "] analytic " << report.worst_analytic
                                          << " numeric " << report.worst_numeric;

    if (!sparse) {
      // Input gradient against central differences too.
      forward();
      std::vector<double> gin(in, 0.0);
      layer.backward(cache, c, gin);
      for (auto* p : params) p->zero_grad();
      auto f = [&](std::span<const double> z) {
        LayerCache cz;
        layer.forward(z, cz);
        double s = 0.0;
        for (std::size_t k = 0; k < out; ++k) s += c[k] * cz.output()[k];
        return s;
      };
      const auto r2 = gradient_check(f, gin, x);
      ASSERT_LT(r2.max_rel_error, 1e-4);
    }
  }
  RecordProperty("worst_rel_error", std::to_string(worst));
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradient,
                         ::testing::Values(LayerCase{Activation::relu, false},
                                           LayerCase{Activation::sigmoid, false},
                                           LayerCase{Activation::identity, false},
                                           LayerCase{Activation::relu, true},
                                           LayerCase{Activation::sigmoid, true},
                                           LayerCase{Activation::identity, true}));

TEST(SparseLayer, MatchesDenseLayerWithSameWeights) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseLayer sparse("s", 50, 6, Activation::relu, true);
  DenseLayer dense("d", 50, 6, Activation::relu, false);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 50; ++c) sparse.weight(r, c) = dense.weight(r, c) = normal(rng);
    sparse.bias().value[r] = dense.bias().value[r] = normal(rng);
  }
  std::vector<double> x(50, 0.0);
  std::vector<SparseEntry> sx;
  for (std::uint32_t c = 0; c < 50; c += 7) {
    x[c] = normal(rng);
    sx.push_back({c, x[c]});
  }
  LayerCache a, b;
  sparse.forward(std::span<const SparseEntry>(sx), a);
  dense.forward(std::span<const double>(x), b);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_NEAR(a.output()[r], b.output()[r], 1e-12);
}

TEST(Adam, ZeroGradientLeavesValues) {
  Parameter p("p", 2, 2);
  for (std::size_t k = 0; k < 4; ++k) p.value[k] = 0.1 * k;
  const auto before = std::vector<double>(p.value.values().begin(), p.value.values().end());
  adam_step(p, AdamConfig{});
  EXPECT_EQ(std::vector<double>(p.value.values().begin(), p.value.values().end()), before);
  EXPECT_EQ(p.step_count, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  Parameter p("p", 3, 1);
  p.grad[0] = 2.5;
  p.grad[1] = -0.003;
  p.grad[2] = 40.0;
  const AdamConfig cfg{1e-3, 0.9, 0.999, 1e-8};
  adam_step(p, cfg);
  // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value[0], -1e-3 * 2.5 / (2.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value[1], 1e-3 * 0.003 / (0.003 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value[2], -1e-3, 1e-12);
  EXPECT_EQ(p.grad[0], 0.0);
}

TEST(Adam, TwoStepsReduceConvexQuadratic) {
  Parameter p("p", 2, 1);
  p.value[0] = 1.0;
  p.value[1] = -2.0;
  auto f = [&] { return p.value[0] * p.value[0] + 3.0 * p.value[1] * p.value[1]; };
  const double before = f();
  for (int s = 0; s < 2; ++s) {
    p.grad[0] = 2.0 * p.value[0];
    p.grad[1] = 6.0 * p.value[1];
    adam_step(p, AdamConfig{0.1});
  }
  EXPECT_LT(f(), before);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Parameter p("user0.W", 2, 1);
  p.grad[1] = std::nan("");
  try {
    adam_step(p, AdamConfig{});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("user0.W"), std::string::npos);
  }
  EXPECT_EQ(p.value[0], 0.0);
}

TEST(GradientCheck, QuadraticAtThree) {
  Parameter w("w", 1, 1);
  w.value[0] = 3.0;
  Parameter* params[] = {&w};
  const auto r = gradient_check([&] { return w.value[0] * w.value[0]; },
                                [&] { w.grad[0] += 2.0 * w.value[0]; }, params);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(w.value[0], 3.0);
  EXPECT_EQ(r.coordinates_checked, 1u);
}

TEST(GradientCheck, LogLossDerivativeAtHalf) {
  const auto r = loss::log_loss(0.5, 1.0);
  EXPECT_DOUBLE_EQ(r.gradient, -2.0);
  const std::vector<double> point{0.5}, analytic{r.gradient};
  const auto rep = gradient_check(
      [](std::span<const double> y) { return loss::log_loss(y[0], 1.0).value; }, analytic, point);
  EXPECT_LT(rep.max_rel_error, 1e-8);
}

TEST(GradientCheck, ReportsWorstOffender) {
  Parameter a("a", 1, 1), b("b", 2, 1);
  Parameter* params[] = {&a, &b};
  const auto r = gradient_check(
      [&] { return a.value[0] + 2.0 * b.value[1]; },
      [&] {
        a.grad[0] += 1.0;
        b.grad[1] += 3.0;  // wrong on purpose
      },
      params);
  EXPECT_FALSE(r.passed(1e-4));
  EXPECT_EQ(r.worst_parameter, "b");
  EXPECT_EQ(r.worst_index, 1u);
}

}  // namespace
