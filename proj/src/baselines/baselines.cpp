#include "jncf/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "jncf/core/activation.hpp"
#include "jncf/core/binary_io.hpp"
#include "jncf/core/errors.hpp"
#include "jncf/core/random.hpp"
#include "jncf/simd/kernels.hpp"
#include "jncf/trainer/trainer.hpp"

namespace jncf {

ItemPopModel::ItemPopModel(const RatingMatrix& train) : counts_(train.num_items(), 0.0) {
  for (std::uint32_t i = 0; i < train.num_items(); ++i) {
    counts_[i] = static_cast<double>(train.item_count(i));
  }
}

ItemPopModel ItemPopModel::from_user_rows(const RatingMatrix& train) {
  ItemPopModel m;
  m.counts_.assign(train.num_items(), 0.0);
  for (std::uint32_t u = 0; u < train.num_users(); ++u) {
    for (const auto& e : train.user_row(u)) m.counts_[e.index] += 1.0;
  }
  return m;
}

double ItemPopModel::score(std::uint32_t, std::uint32_t item) const {
  if (item >= counts_.size()) {
    throw IndexError("item " + std::to_string(item) + " out of range [0, " +
                     std::to_string(counts_.size()) + ")");
  }
  return counts_[item];
}

void ItemPopModel::score(std::uint32_t user, std::span<const std::uint32_t> items,
                         std::span<double> out) const {
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = score(user, items[k]);
}

void BprConfig::validate() const {
  if (factors < 1) throw ConfigError("bpr.factors must be >= 1");
  if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
    throw ConfigError("bpr.learning_rate must be finite and >= 0");
  }
  if (reg < 0.0) throw ConfigError("bpr.reg must be >= 0");
  if (!(init_stddev > 0.0)) throw ConfigError("bpr.init_stddev must be > 0");
}

BprMfModel::BprMfModel(std::size_t num_users, std::size_t num_items, std::size_t factors,
                       double init_stddev, std::uint64_t seed)
    : num_users_(num_users),
      num_items_(num_items),
      factors_(factors),
      users_(num_users * factors),
      items_(num_items * factors) {
  Rng rng = make_rng(seed, SeedStream::bpr, 0);
  fill_normal(users_, 0.0, init_stddev, rng);
  fill_normal(items_, 0.0, init_stddev, rng);
}

double BprMfModel::score(std::uint32_t user, std::uint32_t item) const {
  if (user >= num_users_ || item >= num_items_) {
    throw IndexError("pair (" + std::to_string(user) + ", " + std::to_string(item) +
                     ") out of range");
  }
  return simd::dot(user_factors(user), item_factors(item));
}

void BprMfModel::score(std::uint32_t user, std::span<const std::uint32_t> items,
                       std::span<double> out) const {
  for (std::size_t k = 0; k < items.size(); ++k) out[k] = score(user, items[k]);
}

namespace {

double squared_norm(std::span<const double> v) { return simd::dot(v, v); }

// -ln sigmoid(x) computed without overflow.
double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

}  // namespace

double BprMfModel::triple_loss(std::uint32_t u, std::uint32_t i, std::uint32_t j,
                               double reg) const {
  const double x = score(u, i) - score(u, j);
  return neg_log_sigmoid(x) + 0.5 * reg *
                                  (squared_norm(user_factors(u)) + squared_norm(item_factors(i)) +
                                   squared_norm(item_factors(j)));
}

void BprMfModel::triple_gradient(std::uint32_t u, std::uint32_t i, std::uint32_t j, double reg,
                                 std::span<double> d_user, std::span<double> d_pos,
                                 std::span<double> d_neg) const {
  const auto p = user_factors(u);
  const auto qi = item_factors(i);
  const auto qj = item_factors(j);
  // d/dx of -ln sigmoid(x) is -(1 - sigmoid(x)) = -sigmoid(-x).
  const double g = -sigmoid(-(score(u, i) - score(u, j)));
  for (std::size_t k = 0; k < factors_; ++k) {
    d_user[k] = g * (qi[k] - qj[k]) + reg * p[k];
    d_pos[k] = g * p[k] + reg * qi[k];
    d_neg[k] = -g * p[k] + reg * qj[k];
  }
}

double BprMfModel::sgd_step(std::uint32_t u, std::uint32_t i, std::uint32_t j,
                            double learning_rate, double reg) {
  const double loss = triple_loss(u, i, j, reg);
  std::vector<double> du(factors_), di(factors_), dj(factors_);
  triple_gradient(u, i, j, reg, du, di, dj);
  auto p = user_factors(u);
  auto qi = item_factors(i);
  auto qj = item_factors(j);
  for (std::size_t k = 0; k < factors_; ++k) {
    p[k] -= learning_rate * du[k];
    qi[k] -= learning_rate * di[k];
    qj[k] -= learning_rate * dj[k];
  }
  return loss;
}

BprMfModel bpr_train(const RatingMatrix& train, const BprConfig& config,
                     std::vector<BprEpoch>* log) {
  config.validate();
  BprMfModel model(train.num_users(), train.num_items(), config.factors, config.init_stddev,
                   config.seed);
  auto positives = train.interactions();
  for (std::size_t e = 0; e < config.epochs; ++e) {
    Rng rng = make_rng(config.seed, SeedStream::bpr, e + 1);
    std::shuffle(positives.begin(), positives.end(), rng);
    double total = 0.0;
    for (const auto& x : positives) {
      const auto neg = sample_train_negatives(train, x.user, 1, rng);
      total += model.sgd_step(x.user, x.item, neg[0], config.learning_rate, config.reg);
    }
    if (!std::isfinite(total)) {
      throw NumericError("BPR-MF diverged in epoch " + std::to_string(e + 1) +
                         " (non-finite loss)");
    }
    if (log) log->push_back({e + 1, positives.empty() ? 0.0 : total / positives.size()});
  }
  return model;
}

namespace {
constexpr std::string_view kBprMagic = "JNCFBPR1";
constexpr std::string_view kBprTrailer = "END!";
}  // namespace

void save_bpr(const BprMfModel& model, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.bytes(kBprMagic);
  w.value<std::uint32_t>(static_cast<std::uint32_t>(model.num_users()));
  w.value<std::uint32_t>(static_cast<std::uint32_t>(model.num_items()));
  w.value<std::uint32_t>(static_cast<std::uint32_t>(model.factors()));
  for (std::uint32_t u = 0; u < model.num_users(); ++u) w.doubles(model.user_factors(u));
  for (std::uint32_t i = 0; i < model.num_items(); ++i) w.doubles(model.item_factors(i));
  w.bytes(kBprTrailer);
  w.finish();
}

BprMfModel load_bpr(const std::filesystem::path& path) {
  BinaryReader r(path);
  if (r.bytes(kBprMagic.size()) != kBprMagic) {
    throw FormatError("'" + path.string() + "' is not a BPR-MF checkpoint (bad magic)");
  }
  const auto m = r.value<std::uint32_t>();
  const auto n = r.value<std::uint32_t>();
  const auto d = r.value<std::uint32_t>();
  if (d == 0) throw FormatError("BPR-MF checkpoint has zero factors");
  BprMfModel model(m, n, d, 1.0, 0);
  for (std::uint32_t u = 0; u < m; ++u) r.doubles(model.user_factors(u));
  for (std::uint32_t i = 0; i < n; ++i) r.doubles(model.item_factors(i));
  if (r.bytes(kBprTrailer.size()) != kBprTrailer) {
    throw FormatError("'" + path.string() + "': missing end marker");
  }
  return model;
}

}  // namespace jncf
