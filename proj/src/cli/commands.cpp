#include "jncf/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "jncf/baselines/baselines.hpp"
#include "jncf/cli/run_config.hpp"
#include "jncf/core/errors.hpp"
#include "jncf/data/loader.hpp"
#include "jncf/data/split.hpp"
#include "jncf/eval/evaluator.hpp"
#include "jncf/model/jncf_model.hpp"
#include "jncf/trainer/trainer.hpp"

namespace jncf {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f%%", fraction * 100.0);
  return buf;
}

// "users items ratings density" summary.
std::string stats_line(const RatingMatrix& m) {
  std::ostringstream s;
  s << m.num_users() << ' ' << m.num_items() << ' ' << m.num_ratings() << ' '
    << format_percent(m.density());
  return s.str();
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

// Appends rows, writing the header only when the file is new or empty.
void append_report_csv(const fs::path& path, const std::vector<EvalReport>& reports) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  if (fresh) write_report_csv_header(out);
  for (const auto& r : reports) write_report_csv(out, r);
}

json report_to_json(const EvalReport& r) {
  json j{{"model", r.model},
         {"dataset", r.dataset},
         {"cohort", r.cohort},
         {"users", r.users},
         {"skipped_users", r.skipped_users},
         {"total_seconds", r.total_seconds},
         {"mean_seconds_per_user", r.mean_seconds_per_user()}};
  for (const auto& m : r.metrics) {
    j["hr@" + std::to_string(m.n)] = m.hr;
    j["ndcg@" + std::to_string(m.n)] = m.ndcg;
  }
  return j;
}

SplitDataset load_split_for(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.dataset.split.empty()) return read_split(cfg.dataset.split);
  const auto raw = load_dataset(cfg.dataset.path, cfg.dataset.format);
  const auto ds = filter_dataset(raw, cfg.dataset.min_user, cfg.dataset.min_item);
  err << "dataset " << cfg.dataset.name << ": " << stats_line(ds.matrix) << '\n';
  return leave_one_out_split(ds.matrix);
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> alpha;
  std::optional<double> learning_rate;
  std::optional<std::string> fusion;
  std::optional<std::string> feedback;
  std::optional<std::string> kind;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> split;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override train.seed");
    cmd->add_option("--epochs", epochs, "override train.epochs");
    cmd->add_option("--alpha", alpha, "override loss.alpha");
    cmd->add_option("--lr", learning_rate, "override train.learning_rate");
    cmd->add_option("--fusion", fusion, "override model.fusion (concat|multiply)");
    cmd->add_option("--feedback", feedback, "override model.feedback_mode (explicit|implicit)");
    cmd->add_option("--kind", kind, "override model.kind (jncf|bpr)");
    cmd->add_option("--threads", threads, "cap on worker threads");
    cmd->add_option("--out-dir", out_dir, "override output.dir");
    cmd->add_option("--split", split, "override dataset.split");
  }

  void apply(RunConfig& c) const {
    if (seed) {
      c.train.seed = *seed;
      c.bpr.seed = *seed;
    }
    if (epochs) {
      c.train.epochs = *epochs;
      c.bpr.epochs = *epochs;
    }
    if (alpha) c.train.loss.alpha = *alpha;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (fusion) c.model.fusion = parse_fusion(*fusion);
    if (feedback) c.model.feedback = parse_feedback(*feedback);
    if (kind) {
      if (*kind == "jncf") {
        c.kind = ModelKind::jncf;
      } else if (*kind == "bpr") {
        c.kind = ModelKind::bpr;
      } else {
        throw ConfigError("model.kind: unknown value '" + *kind + "' (expected jncf or bpr)");
      }
    }
    if (threads) {
      c.train.threads = *threads;
      c.eval.threads = *threads;
    }
    if (out_dir) c.output_dir = *out_dir;
    if (split) c.dataset.split = *split;
  }
};

struct TrainOutcome {
  double train_seconds = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  fs::path checkpoint;
};

TrainOutcome train_and_save(const RunConfig& cfg, const SplitDataset& split, std::ostream& err) {
  ensure_dir(cfg.output_dir);
  TrainOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  json summary{{"config", run_config_to_json(cfg)}};
  if (cfg.kind == ModelKind::bpr) {
    std::vector<BprEpoch> log;
    const auto model = bpr_train(split.train, cfg.bpr, &log);
    outcome.checkpoint = cfg.output_dir / "bpr.ckpt";
    save_bpr(model, outcome.checkpoint);
    std::ofstream csv(cfg.output_dir / "train_log.csv");
    csv << "epoch,loss\n";
    for (const auto& e : log) csv << e.epoch << ',' << e.loss << '\n';
    outcome.epochs_run = log.size();
    outcome.best_epoch = log.size();
  } else {
    JNCFModel model(cfg.model, split.num_users(), split.num_items(), cfg.train.seed);
    auto result = train(model, split, cfg.train, [&](const EpochRecord& r) {
      err << "epoch " << r.epoch << " loss " << r.loss;
      if (r.hr10) err << " val_hr10 " << *r.hr10 << " val_ndcg10 " << *r.ndcg10;
      err << " t=" << r.seconds << "s\n";
      return true;
    });
    outcome.checkpoint = cfg.output_dir / "model.ckpt";
    save_model(model, outcome.checkpoint);
    result.log.write_csv(cfg.output_dir / "train_log.csv");
    outcome.epochs_run = result.log.epochs.size();
    outcome.best_epoch = result.log.best_epoch;
    summary["best_epoch"] = result.log.best_epoch;
    summary["best_val_hr10"] = result.log.best_hr10;
    summary["stopped_early"] = result.log.stopped_early;
  }
  outcome.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary["epochs_run"] = outcome.epochs_run;
  summary["train_seconds"] = outcome.train_seconds;
  summary["checkpoint"] = outcome.checkpoint.string();
  write_json(cfg.output_dir / "run.json", summary);
  return outcome;
}

// A model loaded for evaluation together with the matrix its scorer reads.
struct LoadedScorer {
  std::string label;
  std::unique_ptr<Scorer> scorer;
};

std::string peek_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string magic(8, '\0');
  in.read(magic.data(), 8);
  return magic;
}

struct OwnedJncfScorer : Scorer {
  OwnedJncfScorer(JNCFModel m, const RatingMatrix& input)
      : model(std::move(m)), scorer(model, input) {}
  void score(std::uint32_t user, std::span<const std::uint32_t> items,
             std::span<double> out) const override {
    scorer.score(user, items, out);
  }
  JNCFModel model;
  JncfScorer scorer;
};

struct OwnedBprScorer : Scorer {
  explicit OwnedBprScorer(BprMfModel m) : model(std::move(m)) {}
  void score(std::uint32_t user, std::span<const std::uint32_t> items,
             std::span<double> out) const override {
    model.score(user, items, out);
  }
  BprMfModel model;
};

LoadedScorer load_scorer(const fs::path& path, const SplitDataset& split) {
  LoadedScorer s;
  s.label = path.stem().string();
  if (peek_magic(path) == "JNCFBPR1") {
    auto model = load_bpr(path);
    if (model.num_users() != split.num_users() || model.num_items() != split.num_items()) {
      throw DataError("checkpoint '" + path.string() + "' does not match the split dimensions");
    }
    s.scorer = std::make_unique<OwnedBprScorer>(std::move(model));
  } else {
    auto model = load_model(path);
    if (model.num_users() != split.num_users() || model.num_items() != split.num_items()) {
      throw DataError("checkpoint '" + path.string() + "' is " + std::to_string(model.num_users()) +
                      "x" + std::to_string(model.num_items()) + " but the split is " +
                      std::to_string(split.num_users()) + "x" + std::to_string(split.num_items()));
    }
    s.scorer = std::make_unique<OwnedJncfScorer>(std::move(model), split.train);
  }
  return s;
}

std::vector<EvalReport> evaluate_all(const std::vector<LoadedScorer>& scorers,
                                     const SplitDataset& split, const EvalSection& eval,
                                     const std::string& dataset, const CandidateSet& set) {
  EvalOptions opts;
  opts.cutoffs = eval.cutoffs;
  opts.threads = eval.threads;
  opts.keep_ranks = false;
  std::vector<EvalReport> reports;
  for (const auto& s : scorers) {
    auto r = evaluate(*s.scorer, set, opts);
    r.model = s.label;
    r.dataset = dataset;
    reports.push_back(r);
    if (!eval.cohorts.empty()) {
      for (auto& c : evaluate_cohorts(*s.scorer, split.train, set, eval.cohorts, opts)) {
        if (!c.report) continue;
        c.report->model = s.label;
        c.report->dataset = dataset;
        reports.push_back(*c.report);
      }
    }
  }
  return reports;
}

void print_reports(std::ostream& out, const std::vector<EvalReport>& reports) {
  char buf[160];
  for (const auto& r : reports) {
    const auto& top = r.metrics.back();
    std::snprintf(buf, sizeof buf, "%s %s %s HR@%zu %.4f NDCG@%zu %.4f users %zu (%.3fs)\n",
                  r.model.c_str(), r.dataset.c_str(), r.cohort.c_str(), top.n, top.hr, top.n,
                  top.ndcg, r.users, r.total_seconds);
    out << buf;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"J-NCF recommender: prepare data, train, evaluate, sparsify, benchmark"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "load, filter and split a raw ratings file");
  std::string prep_input, prep_format = "ml100k", prep_out, prep_ids;
  std::size_t prep_min_user = 0, prep_min_item = 0;
  prepare->add_option("--input", prep_input, "raw ratings file")->required();
  prepare->add_option("--format", prep_format, "ml100k | ml1m | amazon_csv");
  prepare->add_option("--min-user", prep_min_user, "minimum ratings per user");
  prepare->add_option("--min-item", prep_min_item, "minimum ratings per item");
  prepare->add_option("--out", prep_out, "prepared split file")->required();
  prepare->add_option("--ids-dir", prep_ids, "directory for users.csv / items.csv id maps");

  // train
  auto* train_cmd = app.add_subcommand("train", "train J-NCF or BPR-MF from a JSON config");
  std::string train_config;
  Overrides train_over;
  train_cmd->add_option("--config", train_config, "run config (JSON)")->required();
  train_over.attach(train_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "rank held-out items among sampled negatives");
  std::string eval_split, eval_config, eval_json, eval_csv, eval_dump, eval_dataset = "dataset";
  std::vector<std::string> eval_ckpts;
  bool eval_itempop = false;
  std::optional<std::size_t> eval_negatives, eval_threads;
  std::optional<std::uint64_t> eval_seed;
  std::vector<double> eval_cohorts;
  eval_cmd->add_option("--split", eval_split, "prepared split file")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpts, "J-NCF or BPR-MF checkpoint (repeatable)");
  eval_cmd->add_flag("--itempop", eval_itempop, "also evaluate Item-pop");
  eval_cmd->add_option("--config", eval_config, "run config whose eval block is used");
  eval_cmd->add_option("--negatives", eval_negatives, "negatives per user");
  eval_cmd->add_option("--seed", eval_seed, "candidate sampling seed");
  eval_cmd->add_option("--cohorts", eval_cohorts, "activity percentiles, e.g. 0.1 0.5 0.9");
  eval_cmd->add_option("--threads", eval_threads, "worker threads");
  eval_cmd->add_option("--dataset", eval_dataset, "dataset label for reports");
  eval_cmd->add_option("--json", eval_json, "write reports as JSON");
  eval_cmd->add_option("--csv", eval_csv, "append reports as CSV rows");
  eval_cmd->add_option("--dump-candidates", eval_dump, "write the sampled candidate sets");

  // sparsify
  auto* sparse_cmd = app.add_subcommand("sparsify", "randomly drop ratings to a target size");
  std::string sp_split, sp_out;
  std::optional<std::size_t> sp_count;
  std::optional<double> sp_density;
  std::uint64_t sp_seed = 1;
  sparse_cmd->add_option("--split", sp_split, "prepared split file")->required();
  auto* count_opt = sparse_cmd->add_option("--target-count", sp_count, "ratings to keep");
  auto* dens_opt =
      sparse_cmd->add_option("--target-density", sp_density, "density to keep, in percent");
  count_opt->excludes(dens_opt);
  sparse_cmd->add_option("--seed", sp_seed, "sampling seed");
  sparse_cmd->add_option("--out", sp_out, "output split file")->required();

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "train then evaluate, reporting timings");
  std::string bench_config, bench_csv;
  Overrides bench_over;
  bench_cmd->add_option("--config", bench_config, "run config (JSON)")->required();
  bench_cmd->add_option("--csv", bench_csv, "append the timing row to this CSV");
  bench_over.attach(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prepare) {
      const auto raw = load_dataset(prep_input, parse_dataset_format(prep_format));
      const auto ds = filter_dataset(raw, prep_min_user, prep_min_item);
      const auto split = leave_one_out_split(ds.matrix);
      if (fs::path(prep_out).has_parent_path()) ensure_dir(fs::path(prep_out).parent_path());
      write_split(prep_out, split);
      if (!prep_ids.empty()) {
        ensure_dir(prep_ids);
        write_id_map_csv(fs::path(prep_ids) / "users.csv", ds.ids.users);
        write_id_map_csv(fs::path(prep_ids) / "items.csv", ds.ids.items);
      }
      out << stats_line(ds.matrix) << '\n';
      return kExitOk;
    }

    if (*train_cmd || *bench_cmd) {
      const bool bench = bench_cmd->parsed();
      RunConfig cfg = load_run_config(bench ? bench_config : train_config);
      (bench ? bench_over : train_over).apply(cfg);
      cfg.validate();
      const auto split = load_split_for(cfg, err);
      const auto outcome = train_and_save(cfg, split, err);
      if (!bench) {
        out << "wrote " << outcome.checkpoint.string() << " and "
            << (cfg.output_dir / "train_log.csv").string() << '\n';
        return kExitOk;
      }
      std::vector<LoadedScorer> scorers;
      scorers.push_back(load_scorer(outcome.checkpoint, split));
      const auto set = build_candidates(split.train, split.test, cfg.eval.negatives, cfg.eval.seed);
      EvalSection eval = cfg.eval;
      eval.cohorts.clear();
      const auto reports = evaluate_all(scorers, split, eval, cfg.dataset.name, set);
      const auto& r = reports.front();
      const double mean_epoch =
          outcome.epochs_run == 0 ? 0.0 : outcome.train_seconds / outcome.epochs_run;
      char row[256];
      std::snprintf(row, sizeof row, "%s,%s,%.3f,%.3f,%zu,%.3f,%.6f,%.4f,%.4f",
                    cfg.kind == ModelKind::jncf ? "jncf" : "bpr", cfg.dataset.name.c_str(),
                    outcome.train_seconds, mean_epoch, outcome.best_epoch, r.total_seconds,
                    r.mean_seconds_per_user() * 1e3, r.hr(r.metrics.back().n),
                    r.ndcg(r.metrics.back().n));
      const char* header =
          "model,dataset,train_total_s,train_mean_epoch_s,best_epoch,predict_total_s,"
          "rank_mean_ms_per_user,hr,ndcg";
      out << header << '\n' << row << '\n';
      if (!bench_csv.empty()) {
        const bool fresh = !fs::exists(bench_csv) || fs::file_size(bench_csv) == 0;
        std::ofstream csv(bench_csv, std::ios::app);
        if (!csv) throw DataError("cannot write '" + bench_csv + "'");
        if (fresh) csv << header << '\n';
        csv << row << '\n';
      }
      return kExitOk;
    }

    if (*eval_cmd) {
      EvalSection eval;
      if (!eval_config.empty()) eval = load_run_config(eval_config).eval;
      if (eval_negatives) eval.negatives = *eval_negatives;
      if (eval_seed) eval.seed = *eval_seed;
      if (!eval_cohorts.empty()) eval.cohorts = eval_cohorts;
      if (eval_threads) eval.threads = *eval_threads;
      if (eval_ckpts.empty() && !eval_itempop) {
        throw ConfigError("evaluate needs at least one --checkpoint or --itempop");
      }
      for (double p : eval.cohorts) {
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("eval.cohorts entries must lie in (0, 1]");
      }
      const auto split = read_split(eval_split);
      std::vector<LoadedScorer> scorers;
      for (const auto& c : eval_ckpts) scorers.push_back(load_scorer(c, split));
      if (eval_itempop) scorers.push_back({"itempop", std::make_unique<ItemPopModel>(split.train)});
      // One candidate set shared by every model in this invocation.
      const auto set = build_candidates(split.train, split.test, eval.negatives, eval.seed);
      if (set.skipped_users > 0) {
        err << "warning: " << set.skipped_users << " users skipped (fewer than "
            << eval.negatives << " negatives)\n";
      }
      if (!eval_dump.empty()) {
        std::ofstream dump(eval_dump);
        if (!dump) throw DataError("cannot write '" + eval_dump + "'");
        for (const auto& c : set.cases) {
          dump << c.user << ' ' << c.positive;
          for (auto j : c.negatives) dump << ' ' << j;
          dump << '\n';
        }
      }
      const auto reports = evaluate_all(scorers, split, eval, eval_dataset, set);
      print_reports(out, reports);
      if (!eval_json.empty()) {
        json doc{{"eval",
                  {{"negatives", eval.negatives},
                   {"cutoffs", eval.cutoffs},
                   {"seed", eval.seed},
                   {"cohorts", eval.cohorts},
                   {"split", eval_split},
                   {"checkpoints", eval_ckpts}}},
                 {"reports", json::array()}};
        for (const auto& r : reports) doc["reports"].push_back(report_to_json(r));
        write_json(eval_json, doc);
      }
      if (!eval_csv.empty()) append_report_csv(eval_csv, reports);
      return kExitOk;
    }

    if (*sparse_cmd) {
      if (!sp_count && !sp_density) {
        throw ConfigError("sparsify needs --target-count or --target-density");
      }
      const auto split = read_split(sp_split);
      const auto full = split.full_matrix();
      std::size_t target = 0;
      if (sp_count) {
        target = *sp_count;
      } else {
        if (!(*sp_density > 0.0 && *sp_density <= 100.0)) {
          throw ConfigError("--target-density must lie in (0, 100]");
        }
        target = static_cast<std::size_t>(std::llround(
            *sp_density / 100.0 * static_cast<double>(full.num_users() * full.num_items())));
      }
      const auto sparse = sparsify(full, target, sp_seed);
      write_split(sp_out, leave_one_out_split(sparse));
      out << stats_line(sparse) << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const StateError& e) {
    err << "training failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace jncf
