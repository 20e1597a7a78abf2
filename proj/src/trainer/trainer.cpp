#include "jncf/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>
#include <utility>

#include "jncf/core/errors.hpp"
#include "jncf/core/random.hpp"
#include "jncf/eval/evaluator.hpp"

namespace jncf {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite value > 0");
  }
  if (threads < 1) throw ConfigError("train.threads must be >= 1");
  if (eval_every > 0 && validation_negatives < 1) {
    throw ConfigError("train.validation_negatives must be >= 1 when validation is enabled");
  }
  loss.validate();
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,loss,hr10,ndcg10,seconds\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", e.epoch, e.loss);
    out << buf;
    if (e.hr10) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,", *e.hr10, *e.ndcg10);
      out << buf;
    } else {
      out << ",,";
    }
    std::snprintf(buf, sizeof buf, "%.6f", e.seconds);
    out << buf << '\n';
  }
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(out);
}

ValidationSplit validation_split(const RatingMatrix& train) {
  return ValidationSplit{leave_one_out_split(train)};
}

std::vector<std::uint32_t> sample_train_negatives(const RatingMatrix& train, std::uint32_t user,
                                                  std::size_t count, Rng& rng) {
  const auto row = train.user_row(user);
  const std::size_t available = train.num_items() - row.size();
  if (count > available) {
    throw DataError("user " + std::to_string(user) + " has " + std::to_string(available) +
                    " unrated items, cannot sample " + std::to_string(count) + " negatives");
  }
  std::vector<std::uint32_t> out;
  out.reserve(count);
  std::uniform_int_distribution<std::uint32_t> pick(
      0, static_cast<std::uint32_t>(train.num_items() - 1));
  // Rejection sampling; rows are short relative to N in every dataset we use.
  while (out.size() < count) {
    const std::uint32_t j = pick(rng);
    if (train.contains(user, j)) continue;
    if (std::find(out.begin(), out.end(), j) != out.end()) continue;
    out.push_back(j);
  }
  return out;
}

namespace {

struct InstanceScratch {
  TowerTrace user;
  std::vector<TowerTrace> items;
  std::vector<HeadTrace> heads;
  std::vector<double> negative_scores;
  std::vector<double> d_user;
  std::vector<double> d_item;
};

double accumulate_instance(const JNCFModel& model, const RatingMatrix& train,
                           const std::vector<double>& user_max_rating, const LossConfig& loss,
                           const Interaction& positive, std::span<const std::uint32_t> negatives,
                           GradientTarget& grads, InstanceScratch& s) {
  const std::size_t candidates = negatives.size() + 1;
  if (s.items.size() < candidates) {
    s.items.resize(candidates);
    s.heads.resize(candidates);
  }
  model.user_forward(train, positive.user, s.user);
  const auto zu = s.user.output();
  model.item_forward(train, positive.item, s.items[0]);
  const double pos_score = model.head_forward(zu, s.items[0].output(), s.heads[0]);
  s.negative_scores.resize(negatives.size());
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    model.item_forward(train, negatives[k], s.items[k + 1]);
    s.negative_scores[k] = model.head_forward(zu, s.items[k + 1].output(), s.heads[k + 1]);
  }

  const double target = model.config().feedback == FeedbackMode::implicit
                            ? 1.0
                            : normalized_target(positive.rating, user_max_rating[positive.user]);
  const auto g = hybrid_loss(loss, target, pos_score, s.negative_scores);

  const std::size_t d = model.feature_width();
  s.d_user.assign(d, 0.0);
  for (std::size_t k = 0; k < candidates; ++k) {
    const double d_score = k == 0 ? g.d_positive : g.d_negatives[k - 1];
    s.d_item.assign(d, 0.0);
    model.head_backward(s.heads[k], d_score, grads, s.d_user, s.d_item);
    model.item_backward(s.items[k], s.d_item, grads);
  }
  model.user_backward(s.user, s.d_user, grads);
  return g.value;
}

struct GroupRange {
  const char* name;
  std::size_t begin;
  std::size_t end;
};

// Every parameter group must have received some gradient.
void assert_joint_signal(const JNCFModel& model, const GradientTarget& grads) {
  const GroupRange groups[] = {
      {"user tower", model.user_param_begin(), model.item_param_begin()},
      {"item tower", model.item_param_begin(), model.di_param_begin()},
      {"DI stack", model.di_param_begin(), model.h_param_index()},
      {"output weights h", model.h_param_index(), model.h_param_index() + 1},
  };
  for (const auto& g : groups) {
    bool any = false;
    for (std::size_t p = g.begin; p < g.end && !any; ++p) {
      any = std::any_of(grads[p].begin(), grads[p].end(), [](double v) { return v != 0.0; });
    }
    if (!any) {
      throw StateError(std::string("joint training check failed: no gradient reached the ") +
                       g.name);
    }
  }
}

}  // namespace

double accumulate_batch_gradients(const JNCFModel& model, const RatingMatrix& train,
                                  const std::vector<double>& user_max_rating,
                                  const LossConfig& loss, std::span<const Interaction> positives,
                                  std::span<const std::vector<std::uint32_t>> negatives,
                                  GradientTarget& grads) {
  if (positives.size() != negatives.size()) {
    throw ShapeError("accumulate_batch_gradients: " + std::to_string(positives.size()) +
                     " positives vs " + std::to_string(negatives.size()) + " negative sets");
  }
  thread_local InstanceScratch scratch;
  double total = 0.0;
  for (std::size_t k = 0; k < positives.size(); ++k) {
    total += accumulate_instance(model, train, user_max_rating, loss, positives[k], negatives[k],
                                 grads, scratch);
  }
  return total;
}

double train_epoch(JNCFModel& model, const RatingMatrix& train,
                   const std::vector<double>& user_max_rating, const TrainConfig& config,
                   std::size_t epoch_index) {
  auto positives = train.interactions();
  if (positives.empty()) throw DataError("training matrix has no interactions");
  Rng shuffle_rng = make_rng(config.seed, SeedStream::shuffle, epoch_index);
  std::shuffle(positives.begin(), positives.end(), shuffle_rng);

  Rng negative_rng = make_rng(config.seed, SeedStream::train_negatives, epoch_index);
  std::vector<std::vector<std::uint32_t>> negatives(positives.size());
  for (std::size_t k = 0; k < positives.size(); ++k) {
    negatives[k] =
        sample_train_negatives(train, positives[k].user, config.loss.negative_count, negative_rng);
  }

  const AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  auto params = model.parameters();
  GradientTarget model_grads = model.own_gradients();
  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  std::vector<GradientBuffer> buffers;
  if (threads > 1) {
    for (std::size_t t = 0; t < threads; ++t) buffers.emplace_back(model.parameter_sizes());
  }

  double epoch_loss = 0.0;
  const std::size_t batches = (positives.size() + config.batch_size - 1) / config.batch_size;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t end = std::min(positives.size(), begin + config.batch_size);
    const std::size_t count = end - begin;
    const std::span<const Interaction> pos(positives.data() + begin, count);
    const std::span<const std::vector<std::uint32_t>> neg(negatives.data() + begin, count);

    for (Parameter* p : params) p->zero_grad();
    double batch_loss = 0.0;
    try {
      const std::size_t workers = std::min(threads, count);
      if (workers <= 1) {
        batch_loss = accumulate_batch_gradients(model, train, user_max_rating, config.loss, pos,
                                                neg, model_grads);
      } else {
        std::vector<double> partial(workers, 0.0);
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (count + workers - 1) / workers;
        {
          std::vector<std::jthread> pool;
          for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
              const std::size_t cb = t * chunk, ce = std::min(count, cb + chunk);
              try {
                buffers[t].zero();
                if (cb >= ce) return;
                auto target = buffers[t].target();
                partial[t] = accumulate_batch_gradients(model, train, user_max_rating,
                                                        config.loss, pos.subspan(cb, ce - cb),
                                                        neg.subspan(cb, ce - cb), target);
              } catch (...) {
                errors[t] = std::current_exception();
              }
            });
          }
        }
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        // Merge in thread order so the result does not depend on scheduling.
        for (std::size_t t = 0; t < workers; ++t) {
          batch_loss += partial[t];
          const auto& data = buffers[t].data();
          for (std::size_t p = 0; p < params.size(); ++p) {
            auto g = params[p]->grad.values();
            for (std::size_t k = 0; k < g.size(); ++k) g[k] += data[p][k];
          }
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch_index + 1) + " batch " +
                         std::to_string(b + 1) + ": " + e.what());
    }
    if (!std::isfinite(batch_loss)) {
      throw NumericError("epoch " + std::to_string(epoch_index + 1) + " batch " +
                         std::to_string(b + 1) + ": non-finite loss");
    }
    if (epoch_index == 0 && b == 0) assert_joint_signal(model, model_grads);

    if (config.loss.lambda_reg > 0.0) {
      const double scale = config.loss.lambda_reg * static_cast<double>(count);
      for (Parameter* p : params) {
        auto g = p->grad.values();
        const auto v = p->value.values();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += scale * v[k];
      }
    }
    const double grad_scale = 1.0 / static_cast<double>(count);
    try {
      for (Parameter* p : params) adam_step(*p, adam, grad_scale);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch_index + 1) + " batch " +
                         std::to_string(b + 1) + ": " + e.what());
    }
    epoch_loss += batch_loss;
  }
  return epoch_loss / static_cast<double>(positives.size());
}

TrainResult train(JNCFModel& model, const SplitDataset& split, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (model.num_users() != split.num_users() || model.num_items() != split.num_items()) {
    throw ShapeError("model is " + std::to_string(model.num_users()) + "x" +
                     std::to_string(model.num_items()) + " but the split is " +
                     std::to_string(split.num_users()) + "x" + std::to_string(split.num_items()));
  }
  TrainResult result;
  const bool validate = config.eval_every > 0;
  std::optional<ValidationSplit> val;
  std::optional<CandidateSet> candidates;
  if (validate) {
    val = validation_split(split.train);
    candidates = build_candidates(val->data.train, val->data.test, config.validation_negatives,
                                  derive_seed(config.seed, static_cast<std::uint64_t>(
                                                               SeedStream::validation_negatives)));
    result.training_matrix = val->data.train;
  } else {
    result.training_matrix = split.train;
  }
  const RatingMatrix& train_matrix = result.training_matrix;
  const std::vector<double>& max_rating =
      validate ? val->data.user_max_rating : split.user_max_rating;

  auto params = model.parameters();
  std::vector<std::vector<double>> best;
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t e = 0; e < config.epochs; ++e) {
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.loss = train_epoch(model, train_matrix, max_rating, config, e);
    if (validate && rec.epoch % config.eval_every == 0) {
      EvalOptions opts;
      opts.cutoffs = {10};
      opts.threads = config.threads;
      opts.keep_ranks = false;
      const JncfScorer scorer(model, train_matrix);
      const auto report = evaluate(scorer, *candidates, opts);
      rec.hr10 = report.hr(10);
      rec.ndcg10 = report.ndcg(10);
      if (result.log.best_epoch == 0 || *rec.hr10 > result.log.best_hr10) {
        result.log.best_epoch = rec.epoch;
        result.log.best_hr10 = *rec.hr10;
        best.clear();
        for (const Parameter* p : params) {
          const auto v = std::as_const(*p).value.values();
          best.emplace_back(v.begin(), v.end());
        }
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
    if (config.early_stop_patience > 0 && since_best >= config.early_stop_patience) {
      result.log.stopped_early = true;
      break;
    }
  }
  if (!best.empty()) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      std::copy(best[p].begin(), best[p].end(), params[p]->value.values().begin());
    }
  }
  return result;
}

}  // namespace jncf
