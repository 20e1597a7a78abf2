#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "jncf/core/errors.hpp"
#include "jncf/core/gradient_check.hpp"
#include "jncf/core/random.hpp"
#include "jncf/loss/hybrid.hpp"
#include "jncf/model/jncf_model.hpp"

namespace {

using namespace jncf;
namespace fs = std::filesystem;

RatingMatrix toy_matrix() {
  // 5 users x 6 items.
  std::vector<Interaction> xs{{0, 0, 5, 1}, {0, 2, 3, 2}, {0, 4, 4, 3}, {1, 1, 2, 1},
                              {1, 2, 5, 2}, {2, 0, 1, 1}, {2, 3, 4, 2}, {2, 5, 3, 3},
                              {3, 4, 5, 1}, {3, 1, 4, 2}, {4, 5, 2, 1}, {4, 3, 5, 2}};
  return RatingMatrix::from_interactions(5, 6, xs);
}

ModelConfig small_config() {
  ModelConfig c;
  c.user_layers = {6, 4, 3};
  c.item_layers = {5, 3};
  c.di_layers = {4, 2};
  return c;
}

TEST(ModelConfig, DefaultShapes) {
  const JNCFModel m(ModelConfig{}, 943, 1682, 1);
  ASSERT_EQ(m.user_tower().size(), 3u);
  EXPECT_EQ(m.user_tower()[0].weight_shape(), (Shape{256, 1682}));
  EXPECT_EQ(m.user_tower()[1].weight_shape(), (Shape{128, 256}));
  EXPECT_EQ(m.user_tower()[2].weight_shape(), (Shape{64, 128}));
  EXPECT_EQ(m.item_tower()[0].weight_shape(), (Shape{256, 943}));
  EXPECT_EQ(m.di_stack()[0].weight_shape(), (Shape{128, 128}));
  EXPECT_EQ(m.di_stack()[1].weight_shape(), (Shape{8, 128}));
  EXPECT_EQ(m.output_weights().shape(), (Shape{8, 1}));
  ModelConfig mul;
  mul.fusion = FusionMode::multiply;
  EXPECT_EQ(JNCFModel(mul, 3, 4, 1).di_stack()[0].weight_shape(), (Shape{128, 64}));
}

TEST(ModelConfig, IncompatibleWidthsNameBothLayers) {
  ModelConfig c;
  c.item_layers = {256, 32};
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("user_layers[2]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("item_layers[1]"), std::string::npos) << msg;
  }
  ModelConfig z;
  z.di_layers = {8, 0};
  EXPECT_THROW(z.validate(), ConfigError);
  EXPECT_EQ(halving_widths(64, 4), (std::vector<std::size_t>{64, 32, 16, 8}));
}

TEST(ModelInit, DeterministicAndBiasesZero) {
  const JNCFModel a(small_config(), 5, 6, 11), b(small_config(), 5, 6, 11),
      c(small_config(), 5, 6, 12);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool differs = false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const auto va = pa[k]->value.values(), vb = pb[k]->value.values(), vc = pc[k]->value.values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
    differs |= !std::equal(va.begin(), va.end(), vc.begin());
    if (pa[k]->name.ends_with(".b")) {
      for (double v : va) EXPECT_EQ(v, 0.0);
    }
  }
  EXPECT_TRUE(differs);
}

TEST(ModelInit, WeightStatistics) {
  const JNCFModel m(ModelConfig{}, 943, 1682, 3);
  const auto& w = m.user_tower()[0].weights().value.values();
  const std::size_t n = 100000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += w[k];
  const double mean = sum / n;
  for (std::size_t k = 0; k < n; ++k) sq += (w[k] - mean) * (w[k] - mean);
  const double sd = std::sqrt(sq / (n - 1));
  EXPECT_LT(std::abs(mean), 3.0 * 0.01 / std::sqrt(double(n)));
  EXPECT_NEAR(sd, 0.01, 0.05 * 0.01);
  for (double v : m.output_weights().value.values()) EXPECT_NE(v, 0.0);
}

TEST(Fuse, ConcatMultiplyIdentity) {
  const std::vector<double> zu{1, 2}, zi{3, 4}, ones{1, 1};
  EXPECT_EQ(fuse(zu, zi, FusionMode::concat), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(fuse(zu, zi, FusionMode::multiply), (std::vector<double>{3, 8}));
  EXPECT_EQ(fuse(zu, ones, FusionMode::multiply), zu);
  EXPECT_THROW(fuse(zu, std::vector<double>{1}, FusionMode::concat), ShapeError);
}

TEST(Tower, ZeroInputWithZeroBiasesGivesZero) {
  const JNCFModel m(small_config(), 5, 6, 1);
  TowerTrace t;
  m.user_forward(std::vector<double>(6, 0.0), t);
  for (double v : t.output()) EXPECT_EQ(v, 0.0);
}

TEST(Tower, OneLayerHandTrace) {
  ModelConfig c;
  c.user_layers = {2};
  c.item_layers = {2};
  c.di_layers = {1};
  JNCFModel m(c, 2, 2, 1);
  auto& l = m.user_tower()[0];
  l.weight(0, 0) = 1.0;
  l.weight(0, 1) = -2.0;
  l.weight(1, 0) = 0.5;
  l.weight(1, 1) = 3.0;
  l.bias().value[0] = 0.25;
  TowerTrace t;
  m.user_forward(std::vector<double>{2.0, 1.0}, t);
  // relu(2 - 2 + 0.25) = 0.25; relu(1 + 3) = 4
  EXPECT_EQ(t.output()[0], 0.25);
  EXPECT_EQ(t.output()[1], 4.0);
}

TEST(Tower, SparsePathEqualsDensePath) {
  const JNCFModel m(ModelConfig{}, 943, 1682, 5);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> rating(1, 5);
  std::vector<double> x(1682, 0.0);
  for (int k = 0; k < 1682; k += 13) x[k] = rating(rng);
  TowerTrace t;
  m.user_forward(x, t);
  const auto ref = m.user_forward_dense(x);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(t.output()[k], ref[k], 1e-12);
  EXPECT_THROW(m.user_forward_dense(std::vector<double>(10, 0.0)), ShapeError);
}

TEST(Predict, ZeroOutputWeightsGiveHalf) {
  JNCFModel m(small_config(), 5, 6, 2);
  for (double& v : m.output_weights().value.values()) v = 0.0;
  const auto train = toy_matrix();
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (std::uint32_t i = 0; i < 6; ++i) EXPECT_EQ(m.predict(train, u, i), 0.5);
  }
}

TEST(Predict, InOpenUnitIntervalAndIndexChecked) {
  const JNCFModel m(small_config(), 5, 6, 2);
  const auto train = toy_matrix();
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (std::uint32_t i = 0; i < 6; ++i) {
      const double y = m.predict(train, u, i);
      EXPECT_GT(y, 0.0);
      EXPECT_LT(y, 1.0);
    }
  }
  EXPECT_THROW(m.predict(train, 5, 0), IndexError);
  EXPECT_THROW(m.predict(train, 0, 6), IndexError);
}

TEST(Predict, TwoByTwoHandTrace) {
  ModelConfig c;
  c.user_layers = {1};
  c.item_layers = {1};
  c.di_layers = {1};
  JNCFModel m(c, 2, 2, 1);
  // user tower: z_u = relu(1*R_u0 + 2*R_u1); item tower: z_i = relu(0.5*R_0i + 1*R_1i)
  m.user_tower()[0].weight(0, 0) = 1.0;
  m.user_tower()[0].weight(0, 1) = 2.0;
  m.item_tower()[0].weight(0, 0) = 0.5;
  m.item_tower()[0].weight(0, 1) = 1.0;
  // DI: relu(0.1*z_u - 0.2*z_i + 0.3); h = 2
  m.di_stack()[0].weight(0, 0) = 0.1;
  m.di_stack()[0].weight(0, 1) = -0.2;
  m.di_stack()[0].bias().value[0] = 0.3;
  m.output_weights().value[0] = 2.0;
  const auto train = RatingMatrix::from_interactions(
      2, 2, std::vector<Interaction>{{0, 0, 4, 1}, {0, 1, 2, 1}, {1, 1, 5, 1}});
  // u=0: z_u = 4 + 4 = 8; i=1: column (2, 5) -> 1 + 5 = 6
  // DI: 0.8 - 1.2 + 0.3 = -0.1 -> relu 0 -> y = sigmoid(0) = 0.5
  EXPECT_EQ(m.predict(train, 0, 1), 0.5);
  // u=1: z_u = 10; i=0: column (4, 0) -> 2; DI: 1 - 0.4 + 0.3 = 0.9; logit 1.8
  EXPECT_NEAR(m.predict(train, 1, 0), 1.0 / (1.0 + std::exp(-1.8)), 1e-12);
}

TEST(Predict, MultiplyDegenerateLinearKernel) {
  ModelConfig c;
  c.user_layers = {3};
  c.item_layers = {3};
  c.di_layers = {3};
  c.fusion = FusionMode::multiply;
  JNCFModel m(c, 5, 6, 4);
  auto& di = m.di_stack()[0];
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < 3; ++k) di.weight(r, k) = r == k ? 1.0 : 0.0;
  }
  for (double& v : m.output_weights().value.values()) v = 1.0;
  const auto train = toy_matrix();
  ForwardTrace t;
  const double y = m.predict(train, 2, 3, t);
  double dot = 0.0;
  for (std::size_t k = 0; k < 3; ++k) dot += t.user.output()[k] * t.item.output()[k];
  EXPECT_NEAR(y, 1.0 / (1.0 + std::exp(-dot)), 1e-12);
}

TEST(Backward, JointSignalReachesEveryGroup) {
  auto cfg = small_config();
  cfg.init_stddev = 0.5;  // a net this narrow is mostly dead at the default scale
  JNCFModel model(cfg, 5, 6, 6);
  const auto train = toy_matrix();
  ForwardTrace t;
  model.predict(train, 0, 2, t);
  auto grads = model.own_gradients();
  model.backward(t, 1.0, grads);
  auto any = [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      for (double v : grads[p]) {
        if (v != 0.0) return true;
      }
    }
    return false;
  };
  EXPECT_TRUE(any(model.user_param_begin(), model.item_param_begin()));
  EXPECT_TRUE(any(model.item_param_begin(), model.di_param_begin()));
  EXPECT_TRUE(any(model.di_param_begin(), model.h_param_index()));
  EXPECT_TRUE(any(model.h_param_index(), model.h_param_index() + 1));
}

// Full model + hybrid loss on the 5-user toy set against central differences.
void full_model_gradient_check(FusionMode fusion, FeedbackMode feedback, std::uint64_t seed) {
  auto cfg = small_config();
  cfg.item_layers = {5, 3};
  cfg.fusion = fusion;
  cfg.feedback = feedback;
  cfg.init_stddev = 0.5;  // keep units active so the check exercises every path
  JNCFModel model(cfg, 5, 6, seed);
  // Nonzero biases keep pre-activations off the ReLU kink at 0.
  Rng bias_rng(seed);
  for (Parameter* p : model.parameters()) {
    if (p->name.ends_with(".b")) fill_normal(p->value.values(), 0.0, 0.1, bias_rng);
  }
  const auto train = toy_matrix();
  LossConfig lc;
  lc.pairwise = PairwiseLoss::top1max;
  lc.negative_count = 2;
  struct Inst {
    std::uint32_t u, i;
    double y;
    std::vector<std::uint32_t> negs;
  };
  const std::vector<Inst> batch{{0, 0, 1.0, {1, 3}}, {2, 3, 0.8, {2, 4}}, {4, 5, 0.4, {0, 1}}};
  auto loss = [&] {
    double total = 0.0;
    for (const auto& b : batch) {
      const double pos = model.predict(train, b.u, b.i);
      std::vector<double> negs;
      for (auto j : b.negs) negs.push_back(model.predict(train, b.u, j));
      total += hybrid_loss(lc, b.y, pos, negs).value;
    }
    return total;
  };
  auto grads = [&] {
    auto target = model.own_gradients();
    for (const auto& b : batch) {
      ForwardTrace tp;
      const double pos = model.predict(train, b.u, b.i, tp);
      std::vector<ForwardTrace> tn(b.negs.size());
      std::vector<double> negs;
      for (std::size_t k = 0; k < b.negs.size(); ++k) {
        negs.push_back(model.predict(train, b.u, b.negs[k], tn[k]));
      }
      const auto g = hybrid_loss(lc, b.y, pos, negs);
      model.backward(tp, g.d_positive, target);
      for (std::size_t k = 0; k < tn.size(); ++k) model.backward(tn[k], g.d_negatives[k], target);
    }
  };
  const auto params = model.parameters();
  const auto report = gradient_check(loss, grads, params);
  EXPECT_LT(report.max_rel_error, 1e-4)
      << report.worst_parameter << "[" << report.worst_index << "] analytic "
      << report.worst_analytic << " numeric " << report.worst_numeric;
  EXPECT_GT(report.coordinates_checked, 100u);
}

TEST(Backward, FullModelGradientCheckConcat) {
  full_model_gradient_check(FusionMode::concat, FeedbackMode::explicit_ratings, 21);
}
TEST(Backward, FullModelGradientCheckMultiply) {
  full_model_gradient_check(FusionMode::multiply, FeedbackMode::explicit_ratings, 22);
}
TEST(Backward, FullModelGradientCheckImplicit) {
  full_model_gradient_check(FusionMode::concat, FeedbackMode::implicit, 23);
}

TEST(Checkpoint, RoundTripIsExact) {
  const JNCFModel m(small_config(), 5, 6, 8);
  const auto path = fs::temp_directory_path() / "jncf_model_roundtrip.ckpt";
  save_model(m, path);
  const auto back = load_model(path);
  const auto train = toy_matrix();
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (std::uint32_t i = 0; i < 6; ++i) EXPECT_EQ(back.predict(train, u, i), m.predict(train, u, i));
  }
  EXPECT_EQ(back.config().user_layers, m.config().user_layers);
  fs::remove(path);
}

TEST(Checkpoint, TruncatedAndBadMagicAreFormatErrors) {
  const JNCFModel m(small_config(), 5, 6, 8);
  const auto path = fs::temp_directory_path() / "jncf_model_trunc.ckpt";
  save_model(m, path);
  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 12);
  EXPECT_THROW(load_model(path), FormatError);
  {
    std::ofstream(path, std::ios::binary) << "NOTACKPT-----------------";
  }
  EXPECT_THROW(load_model(path), FormatError);
  fs::remove(path);
}

TEST(Checkpoint, VersionOneFixtureLoads) {
  const fs::path fixture = fs::path(JNCF_TEST_DATA_DIR) / "model_v1.ckpt";
  ASSERT_TRUE(fs::exists(fixture)) << fixture;
  const auto m = load_model(fixture);
  EXPECT_EQ(m.num_users(), 5u);
  EXPECT_EQ(m.num_items(), 6u);
  const auto train = toy_matrix();
  // Frozen when the fixture was written.
  std::ifstream expected(fs::path(JNCF_TEST_DATA_DIR) / "model_v1.expected");
  ASSERT_TRUE(expected.good());
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (std::uint32_t i = 0; i < 6; ++i) {
      double y = 0.0;
      expected >> y;
      EXPECT_NEAR(m.predict(train, u, i), y, 1e-15);
    }
  }
}

TEST(Checkpoint, FutureVersionRejected) {
  const fs::path fixture = fs::path(JNCF_TEST_DATA_DIR) / "model_v1.ckpt";
  const auto path = fs::temp_directory_path() / "jncf_model_v99.ckpt";
  fs::copy_file(fixture, path, fs::copy_options::overwrite_existing);
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8);
    const unsigned char v[4] = {99, 0, 0, 0};
    f.write(reinterpret_cast<const char*>(v), 4);
  }
  EXPECT_THROW(load_model(path), FormatError);
  fs::remove(path);
}

}  // namespace
