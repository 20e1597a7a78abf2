#include "jncf/model/jncf_model.hpp"

#include <algorithm>
#include <string>

#include "jncf/core/activation.hpp"
#include "jncf/core/binary_io.hpp"
#include "jncf/core/errors.hpp"
#include "jncf/core/random.hpp"
#include "jncf/simd/kernels.hpp"

namespace jncf {

std::string_view fusion_name(FusionMode f) { return f == FusionMode::concat ? "concat" : "multiply"; }

FusionMode parse_fusion(std::string_view name) {
  if (name == "concat") return FusionMode::concat;
  if (name == "multiply") return FusionMode::multiply;
  throw ConfigError("model.fusion: unknown value '" + std::string(name) +
                    "' (expected concat or multiply)");
}

std::string_view feedback_name(FeedbackMode f) {
  return f == FeedbackMode::implicit ? "implicit" : "explicit";
}

FeedbackMode parse_feedback(std::string_view name) {
  if (name == "explicit") return FeedbackMode::explicit_ratings;
  if (name == "implicit") return FeedbackMode::implicit;
  throw ConfigError("model.feedback_mode: unknown value '" + std::string(name) +
                    "' (expected explicit or implicit)");
}

std::vector<std::size_t> halving_widths(std::size_t top, std::size_t layers) {
  std::vector<std::size_t> out;
  std::size_t w = std::max<std::size_t>(top, 1);
  for (std::size_t k = 0; k < layers; ++k) {
    out.push_back(w);
    w = std::max<std::size_t>(w / 2, 1);
  }
  return out;
}

namespace {

std::string layer_label(const char* stack, std::size_t k) {
  return std::string(stack) + "[" + std::to_string(k) + "]";
}

void check_widths(const std::vector<std::size_t>& sizes, const char* stack) {
  if (sizes.empty()) throw ConfigError(std::string("model.") + stack + " must have >= 1 layer");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) {
      throw ConfigError("model." + layer_label(stack, k) + " has width 0 (must be >= 1)");
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  check_widths(user_layers, "user_layers");
  check_widths(item_layers, "item_layers");
  check_widths(di_layers, "di_layers");
  if (user_layers.back() != item_layers.back()) {
    throw ConfigError("model: " + layer_label("user_layers", user_layers.size() - 1) + " width " +
                      std::to_string(user_layers.back()) + " != " +
                      layer_label("item_layers", item_layers.size() - 1) + " width " +
                      std::to_string(item_layers.back()) + " (fusion needs equal tower outputs)");
  }
  if (!(init_stddev > 0.0)) throw ConfigError("model.init_stddev must be > 0");
}

std::size_t ModelConfig::fused_width() const {
  return fusion == FusionMode::concat ? 2 * user_layers.back() : user_layers.back();
}

std::vector<double> fuse(std::span<const double> user_features,
                         std::span<const double> item_features, FusionMode mode) {
  if (user_features.size() != item_features.size()) {
    throw ShapeError("fuse: user features " + Shape{user_features.size(), 1}.str() +
                     " vs item features " + Shape{item_features.size(), 1}.str());
  }
  std::vector<double> out;
  if (mode == FusionMode::concat) {
    out.reserve(2 * user_features.size());
    out.insert(out.end(), user_features.begin(), user_features.end());
    out.insert(out.end(), item_features.begin(), item_features.end());
  } else {
    out.resize(user_features.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = user_features[k] * item_features[k];
  }
  return out;
}

GradientBuffer::GradientBuffer(const std::vector<std::size_t>& sizes) {
  buffers_.reserve(sizes.size());
  for (std::size_t n : sizes) buffers_.emplace_back(n, 0.0);
}

GradientTarget GradientBuffer::target() {
  GradientTarget t;
  t.reserve(buffers_.size());
  for (auto& b : buffers_) t.emplace_back(b);
  return t;
}

void GradientBuffer::zero() {
  for (auto& b : buffers_) std::fill(b.begin(), b.end(), 0.0);
}

JNCFModel::JNCFModel(const ModelConfig& config, std::size_t num_users, std::size_t num_items,
                     std::uint64_t seed)
    : config_(config), num_users_(num_users), num_items_(num_items) {
  config_.validate();
  if (num_users == 0 || num_items == 0) {
    throw ConfigError("model needs at least one user and one item");
  }
  auto build = [](std::vector<DenseLayer>& stack, const char* name, std::size_t input_dim,
                  const std::vector<std::size_t>& sizes, bool sparse_first) {
    std::size_t in = input_dim;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      stack.emplace_back(std::string(name) + std::to_string(k), in, sizes[k], Activation::relu,
                         sparse_first && k == 0);
      in = sizes[k];
    }
  };
  build(user_tower_, "user", num_items, config_.user_layers, true);
  build(item_tower_, "item", num_users, config_.item_layers, true);
  build(di_stack_, "di", config_.fused_width(), config_.di_layers, false);
  h_ = Parameter("h", config_.di_layers.back(), 1);

  Rng rng = make_rng(seed, SeedStream::init);
  for (Parameter* p : parameters()) {
    const bool is_bias = p->name.size() > 2 && p->name.ends_with(".b");
    if (!is_bias) fill_normal(p->value.values(), 0.0, config_.init_stddev, rng);
  }
}

std::vector<Parameter*> JNCFModel::parameters() {
  std::vector<Parameter*> out;
  for (auto* stack : {&user_tower_, &item_tower_, &di_stack_}) {
    for (auto& layer : *stack) {
      out.push_back(&layer.weights());
      out.push_back(&layer.bias());
    }
  }
  out.push_back(&h_);
  return out;
}

std::vector<const Parameter*> JNCFModel::parameters() const {
  auto mutable_params = const_cast<JNCFModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::size_t> JNCFModel::parameter_sizes() const {
  std::vector<std::size_t> out;
  for (const Parameter* p : parameters()) out.push_back(p->size());
  return out;
}

GradientTarget JNCFModel::own_gradients() {
  GradientTarget t;
  for (Parameter* p : parameters()) t.emplace_back(p->grad.values());
  return t;
}

void JNCFModel::tower_forward_sparse(const std::vector<DenseLayer>& tower,
                                     std::span<const RatingEntry> row, TowerTrace& trace) const {
  trace.layers.resize(tower.size());
  auto& first = trace.layers[0];
  first.sparse_input.clear();
  first.sparse_input.reserve(row.size());
  const bool binary = config_.feedback == FeedbackMode::implicit;
  for (const auto& e : row) first.sparse_input.push_back({e.index, binary ? 1.0 : e.rating});
  tower[0].forward(std::span<const SparseEntry>(first.sparse_input), first);
  for (std::size_t k = 1; k < tower.size(); ++k) {
    tower[k].forward(trace.layers[k - 1].output(), trace.layers[k]);
  }
}

void JNCFModel::tower_forward_dense(const std::vector<DenseLayer>& tower,
                                    std::span<const double> input, TowerTrace& trace) const {
  trace.layers.resize(tower.size());
  if (config_.feedback == FeedbackMode::implicit) {
    std::vector<double> binary(input.size());
    for (std::size_t k = 0; k < input.size(); ++k) binary[k] = input[k] != 0.0 ? 1.0 : 0.0;
    tower[0].forward(std::span<const double>(binary), trace.layers[0]);
  } else {
    tower[0].forward(input, trace.layers[0]);
  }
  for (std::size_t k = 1; k < tower.size(); ++k) {
    tower[k].forward(trace.layers[k - 1].output(), trace.layers[k]);
  }
}

void JNCFModel::user_forward(const RatingMatrix& train, std::uint32_t user,
                             TowerTrace& trace) const {
  if (train.num_items() != num_items_) {
    throw ShapeError("user tower expects N=" + std::to_string(num_items_) + " items, matrix has " +
                     std::to_string(train.num_items()));
  }
  tower_forward_sparse(user_tower_, train.user_row(user), trace);
}

void JNCFModel::item_forward(const RatingMatrix& train, std::uint32_t item,
                             TowerTrace& trace) const {
  if (train.num_users() != num_users_) {
    throw ShapeError("item tower expects M=" + std::to_string(num_users_) + " users, matrix has " +
                     std::to_string(train.num_users()));
  }
  tower_forward_sparse(item_tower_, train.item_column(item), trace);
}

void JNCFModel::user_forward(std::span<const double> input, TowerTrace& trace) const {
  tower_forward_dense(user_tower_, input, trace);
}

void JNCFModel::item_forward(std::span<const double> input, TowerTrace& trace) const {
  tower_forward_dense(item_tower_, input, trace);
}

std::vector<double> JNCFModel::user_forward_dense(std::span<const double> input) const {
  if (input.size() != num_items_) {
    throw ShapeError("user tower: weights " + user_tower_[0].weight_shape().str() +
                     " vs input " + Shape{input.size(), 1}.str());
  }
  std::vector<double> x(input.begin(), input.end());
  if (config_.feedback == FeedbackMode::implicit) {
    for (double& v : x) v = v != 0.0 ? 1.0 : 0.0;
  }
  for (const auto& layer : user_tower_) {
    std::vector<double> y(layer.output_dim());
    for (std::size_t r = 0; r < layer.output_dim(); ++r) {
      double s = layer.bias().value[r];
      for (std::size_t c = 0; c < layer.input_dim(); ++c) s += layer.weight(r, c) * x[c];
      y[r] = apply_activation(layer.activation(), s);
    }
    x = std::move(y);
  }
  return x;
}

double JNCFModel::head_forward(std::span<const double> user_features,
                               std::span<const double> item_features, HeadTrace& trace) const {
  trace.user_features.assign(user_features.begin(), user_features.end());
  trace.item_features.assign(item_features.begin(), item_features.end());
  trace.fused = fuse(user_features, item_features, config_.fusion);
  trace.di.resize(di_stack_.size());
  std::span<const double> x = trace.fused;
  for (std::size_t k = 0; k < di_stack_.size(); ++k) {
    di_stack_[k].forward(x, trace.di[k]);
    x = trace.di[k].output();
  }
  trace.logit = simd::dot(h_.value.values(), x);
  trace.score = sigmoid(trace.logit);
  return trace.score;
}

double JNCFModel::score_features(std::span<const double> user_features,
                                 std::span<const double> item_features) const {
  thread_local HeadTrace scratch;
  return head_forward(user_features, item_features, scratch);
}

double JNCFModel::predict(const RatingMatrix& train, std::uint32_t user,
                          std::uint32_t item) const {
  ForwardTrace trace;
  return predict(train, user, item, trace);
}

double JNCFModel::predict(const RatingMatrix& train, std::uint32_t user, std::uint32_t item,
                          ForwardTrace& trace) const {
  user_forward(train, user, trace.user);
  item_forward(train, item, trace.item);
  return head_forward(trace.user.output(), trace.item.output(), trace.head);
}

void JNCFModel::head_backward(const HeadTrace& trace, double d_score, GradientTarget& grads,
                              std::span<double> d_user, std::span<double> d_item) const {
  if (trace.di.empty() || !trace.di.back().recorded) {
    throw StateError("head_backward called without a recorded forward pass");
  }
  const double d_logit = d_score * trace.score * (1.0 - trace.score);
  const auto z = trace.di.back().output();
  auto& dh = grads[h_param_index()];
  simd::kernels().axpy(d_logit, z.data(), dh.data(), z.size());

  std::vector<double> upstream(h_.value.values().begin(), h_.value.values().end());
  for (double& v : upstream) v *= d_logit;
  std::vector<double> below;
  for (std::size_t k = di_stack_.size(); k-- > 0;) {
    const auto& layer = di_stack_[k];
    below.assign(layer.input_dim(), 0.0);
    const std::size_t p = di_param_begin() + 2 * k;
    layer.backward(trace.di[k], upstream, below, {grads[p], grads[p + 1]});
    upstream.swap(below);
  }
  // upstream now holds dL/d(fused)
  const std::size_t d = trace.user_features.size();
  if (config_.fusion == FusionMode::concat) {
    for (std::size_t k = 0; k < d; ++k) {
      d_user[k] += upstream[k];
      d_item[k] += upstream[d + k];
    }
  } else {
    for (std::size_t k = 0; k < d; ++k) {
      d_user[k] += upstream[k] * trace.item_features[k];
      d_item[k] += upstream[k] * trace.user_features[k];
    }
  }
}

void JNCFModel::tower_backward(const std::vector<DenseLayer>& tower, std::size_t param_offset,
                               const TowerTrace& trace, std::span<const double> d_features,
                               GradientTarget& grads) const {
  if (trace.layers.size() != tower.size()) {
    throw StateError("tower backward called without a recorded forward pass");
  }
  std::vector<double> upstream(d_features.begin(), d_features.end());
  std::vector<double> below;
  for (std::size_t k = tower.size(); k-- > 0;) {
    const auto& layer = tower[k];
    const std::size_t p = param_offset + 2 * k;
    if (k == 0) {
      layer.backward(trace.layers[k], upstream, {}, {grads[p], grads[p + 1]});
    } else {
      below.assign(layer.input_dim(), 0.0);
      layer.backward(trace.layers[k], upstream, below, {grads[p], grads[p + 1]});
      upstream.swap(below);
    }
  }
}

void JNCFModel::user_backward(const TowerTrace& trace, std::span<const double> d_features,
                              GradientTarget& grads) const {
  tower_backward(user_tower_, user_param_begin(), trace, d_features, grads);
}

void JNCFModel::item_backward(const TowerTrace& trace, std::span<const double> d_features,
                              GradientTarget& grads) const {
  tower_backward(item_tower_, item_param_begin(), trace, d_features, grads);
}

void JNCFModel::backward(const ForwardTrace& trace, double d_score, GradientTarget& grads) const {
  const std::size_t d = feature_width();
  std::vector<double> du(d, 0.0), di(d, 0.0);
  head_backward(trace.head, d_score, grads, du, di);
  user_backward(trace.user, du, grads);
  item_backward(trace.item, di, grads);
}

std::vector<double> JNCFModel::all_user_features(const RatingMatrix& train) const {
  const std::size_t d = feature_width();
  std::vector<double> out(num_users_ * d);
  TowerTrace trace;
  for (std::uint32_t u = 0; u < num_users_; ++u) {
    user_forward(train, u, trace);
    std::copy(trace.output().begin(), trace.output().end(), out.begin() + u * d);
  }
  return out;
}

std::vector<double> JNCFModel::all_item_features(const RatingMatrix& train) const {
  const std::size_t d = feature_width();
  std::vector<double> out(num_items_ * d);
  TowerTrace trace;
  for (std::uint32_t i = 0; i < num_items_; ++i) {
    item_forward(train, i, trace);
    std::copy(trace.output().begin(), trace.output().end(), out.begin() + i * d);
  }
  return out;
}

namespace {

constexpr std::string_view kMagic = "JNCFCKPT";
constexpr std::string_view kTrailer = "END!";

void write_sizes(BinaryWriter& w, const std::vector<std::size_t>& sizes) {
  w.value<std::uint32_t>(static_cast<std::uint32_t>(sizes.size()));
  for (std::size_t s : sizes) w.value<std::uint32_t>(static_cast<std::uint32_t>(s));
}

std::vector<std::size_t> read_sizes(BinaryReader& r) {
  const auto n = r.value<std::uint32_t>();
  if (n == 0 || n > 64) throw FormatError("checkpoint: implausible layer count " + std::to_string(n));
  std::vector<std::size_t> out(n);
  for (auto& s : out) s = r.value<std::uint32_t>();
  return out;
}

}  // namespace

void save_model(const JNCFModel& model, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.bytes(kMagic);
  w.value<std::uint32_t>(kCheckpointVersion);
  w.value<std::uint32_t>(static_cast<std::uint32_t>(model.num_users()));
  w.value<std::uint32_t>(static_cast<std::uint32_t>(model.num_items()));
  const auto& cfg = model.config();
  w.value<std::uint8_t>(cfg.fusion == FusionMode::concat ? 0 : 1);
  w.value<std::uint8_t>(cfg.feedback == FeedbackMode::explicit_ratings ? 0 : 1);
  w.value<double>(cfg.init_stddev);
  write_sizes(w, cfg.user_layers);
  write_sizes(w, cfg.item_layers);
  write_sizes(w, cfg.di_layers);
  const auto params = model.parameters();
  w.value<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.value<std::uint32_t>(static_cast<std::uint32_t>(p->value.rows()));
    w.value<std::uint32_t>(static_cast<std::uint32_t>(p->value.cols()));
    w.doubles(p->value.values());
  }
  w.bytes(kTrailer);
  w.finish();
}

JNCFModel load_model(const std::filesystem::path& path) {
  BinaryReader r(path);
  if (r.bytes(kMagic.size()) != kMagic) {
    throw FormatError("'" + path.string() + "' is not a J-NCF checkpoint (bad magic)");
  }
  const auto version = r.value<std::uint32_t>();
  if (version == 0 || version > kCheckpointVersion) {
    throw FormatError("'" + path.string() + "': unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto m = r.value<std::uint32_t>();
  const auto n = r.value<std::uint32_t>();
  ModelConfig cfg;
  const auto fusion = r.value<std::uint8_t>();
  const auto feedback = r.value<std::uint8_t>();
  if (fusion > 1 || feedback > 1) throw FormatError("checkpoint: bad fusion/feedback code");
  cfg.fusion = fusion == 0 ? FusionMode::concat : FusionMode::multiply;
  cfg.feedback = feedback == 0 ? FeedbackMode::explicit_ratings : FeedbackMode::implicit;
  cfg.init_stddev = r.value<double>();
  cfg.user_layers = read_sizes(r);
  cfg.item_layers = read_sizes(r);
  cfg.di_layers = read_sizes(r);

  JNCFModel model(cfg, m, n, 0);
  auto params = model.parameters();
  const auto count = r.value<std::uint32_t>();
  if (count != params.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) + " parameters, config implies " +
                      std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const auto rows = r.value<std::uint32_t>();
    const auto cols = r.value<std::uint32_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw FormatError("checkpoint: parameter '" + p->name + "' has shape " +
                        Shape{rows, cols}.str() + ", expected " + p->shape().str());
    }
    r.doubles(p->value.values());
  }
  if (r.bytes(kTrailer.size()) != kTrailer) {
    throw FormatError("'" + path.string() + "': missing end marker");
  }
  return model;
}

}  // namespace jncf
