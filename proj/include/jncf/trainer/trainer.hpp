#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "jncf/core/adam.hpp"
#include "jncf/core/random.hpp"
#include "jncf/data/split.hpp"
#include "jncf/loss/hybrid.hpp"
#include "jncf/model/jncf_model.hpp"

namespace jncf {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 1e-4;
  std::uint64_t seed = 1;
  LossConfig loss;
  std::size_t eval_every = 1;            // 0 disables validation
  std::size_t early_stop_patience = 5;   // evaluations without improvement; 0 = never stop
  std::size_t validation_negatives = 100;
  std::size_t threads = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean hybrid loss over the epoch's instances
  std::optional<double> hr10;
  std::optional<double> ndcg10;
  double seconds = 0.0;   // cumulative wall clock since training started
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no validation ran
  double best_hr10 = 0.0;
  bool stopped_early = false;

  // `epoch,loss,hr10,ndcg10,seconds`; epochs without validation leave the
  // metric fields empty.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

// Reduced train plus one validation item per user (second-latest
// interaction), split off with the same rule as the test item.
struct ValidationSplit {
  SplitDataset data;  // data.train is the reduced train, data.test the validation items
};
ValidationSplit validation_split(const RatingMatrix& train);

// `count` distinct items absent from u's train row, uniform without
// replacement.
std::vector<std::uint32_t> sample_train_negatives(const RatingMatrix& train, std::uint32_t user,
                                                  std::size_t count, Rng& rng);

// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord&)>;

struct TrainResult {
  TrainLog log;
  // Matrix the model was trained on (the reduced train when validation ran).
  RatingMatrix training_matrix;
};

// Trains `model` in place. With validation enabled the model is fit on the
// reduced train, evaluated on the validation items every eval_every epochs,
// and restored to the best-HR@10 parameters at the end.
TrainResult train(JNCFModel& model, const SplitDataset& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// One epoch over `train` with explicit control of the generators; exposed for
// tests. Returns the mean instance loss.
double train_epoch(JNCFModel& model, const RatingMatrix& train,
                   const std::vector<double>& user_max_rating, const TrainConfig& config,
                   std::size_t epoch_index);

// Gradient of the batch-mean hybrid loss for the given instances (positives
// with their negatives), accumulated into `grads`. Returns the summed loss.
double accumulate_batch_gradients(const JNCFModel& model, const RatingMatrix& train,
                                  const std::vector<double>& user_max_rating,
                                  const LossConfig& loss,
                                  std::span<const Interaction> positives,
                                  std::span<const std::vector<std::uint32_t>> negatives,
                                  GradientTarget& grads);

}  // namespace jncf
