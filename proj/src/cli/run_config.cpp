#include "jncf/cli/run_config.hpp"

#include <fstream>
#include <set>

#include "jncf/core/errors.hpp"

namespace jncf {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config field '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + where + "." + key + "' has the wrong type");
  }
}

std::size_t read_count(const json& obj, const std::string& where, const char* key,
                       std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("config field '" + where + "." + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::size_t> read_widths(const json& obj, const std::string& where, const char* key,
                                     std::vector<std::size_t> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError("config field '" + where + "." + key + "' must be an array");
  std::vector<std::size_t> out;
  for (const auto& w : v) {
    if (!w.is_number_integer() || w.get<long long>() < 0) {
      throw ConfigError("config field '" + where + "." + key + "' must hold non-negative integers");
    }
    out.push_back(w.get<std::size_t>());
  }
  return out;
}

std::string read_string(const json& obj, const std::string& where, const char* key,
                        std::string fallback) {
  read(obj, where, key, fallback);
  return fallback;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.path.empty() && dataset.split.empty()) {
    throw ConfigError("dataset.path or dataset.split must be set");
  }
  model.validate();
  train.validate();
  if (!(train.loss.alpha >= 0.0 && train.loss.alpha <= 1.0)) {
    throw ConfigError("loss.alpha must lie in [0, 1]");
  }
  bpr.validate();
  if (eval.negatives < 1) throw ConfigError("eval.negatives must be >= 1");
  if (eval.cutoffs.empty()) throw ConfigError("eval.cutoffs must not be empty");
  for (std::size_t n : eval.cutoffs) {
    if (n < 1 || n > eval.negatives + 1) {
      throw ConfigError("eval.cutoffs entry " + std::to_string(n) + " outside [1, negatives+1]");
    }
  }
  for (double p : eval.cohorts) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("eval.cohorts entries must lie in (0, 1]");
  }
  if (eval.threads < 1) throw ConfigError("eval.threads must be >= 1");
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  check_keys(doc, "config", {"dataset", "model", "loss", "train", "bpr", "eval", "output"});

  if (doc.contains("dataset")) {
    const auto& d = doc.at("dataset");
    check_keys(d, "dataset", {"name", "path", "split", "format", "min_user", "min_item"});
    c.dataset.name = read_string(d, "dataset", "name", c.dataset.name);
    c.dataset.path = read_string(d, "dataset", "path", "");
    c.dataset.split = read_string(d, "dataset", "split", "");
    c.dataset.format = parse_dataset_format(read_string(d, "dataset", "format", "ml100k"));
    c.dataset.min_user = read_count(d, "dataset", "min_user", 0);
    c.dataset.min_item = read_count(d, "dataset", "min_item", 0);
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    check_keys(m, "model", {"kind", "user_layers", "item_layers", "di_layers", "fusion",
                            "feedback_mode", "init_stddev"});
    const auto kind = read_string(m, "model", "kind", "jncf");
    if (kind == "jncf") {
      c.kind = ModelKind::jncf;
    } else if (kind == "bpr") {
      c.kind = ModelKind::bpr;
    } else {
      throw ConfigError("model.kind: unknown value '" + kind + "' (expected jncf or bpr)");
    }
    c.model.user_layers = read_widths(m, "model", "user_layers", c.model.user_layers);
    c.model.item_layers = read_widths(m, "model", "item_layers", c.model.item_layers);
    c.model.di_layers = read_widths(m, "model", "di_layers", c.model.di_layers);
    c.model.fusion = parse_fusion(read_string(m, "model", "fusion", "concat"));
    c.model.feedback = parse_feedback(read_string(m, "model", "feedback_mode", "explicit"));
    read(m, "model", "init_stddev", c.model.init_stddev);
  }
  if (doc.contains("loss")) {
    const auto& l = doc.at("loss");
    check_keys(l, "loss", {"alpha", "pairwise", "pointwise", "listwise_xe", "negatives",
                           "lambda", "instance_weight"});
    auto& loss = c.train.loss;
    read(l, "loss", "alpha", loss.alpha);
    loss.pairwise = parse_pairwise(read_string(l, "loss", "pairwise", "top1"));
    loss.pointwise = parse_pointwise(read_string(l, "loss", "pointwise", "log"));
    read(l, "loss", "listwise_xe", loss.listwise_xe);
    loss.negative_count = read_count(l, "loss", "negatives", loss.negative_count);
    read(l, "loss", "lambda", loss.lambda_reg);
    read(l, "loss", "instance_weight", loss.instance_weight);
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    check_keys(t, "train", {"epochs", "batch_size", "learning_rate", "seed", "eval_every",
                            "early_stop_patience", "validation_negatives", "threads"});
    auto& tr = c.train;
    tr.epochs = read_count(t, "train", "epochs", tr.epochs);
    tr.batch_size = read_count(t, "train", "batch_size", tr.batch_size);
    read(t, "train", "learning_rate", tr.learning_rate);
    read(t, "train", "seed", tr.seed);
    tr.eval_every = read_count(t, "train", "eval_every", tr.eval_every);
    tr.early_stop_patience = read_count(t, "train", "early_stop_patience", tr.early_stop_patience);
    tr.validation_negatives =
        read_count(t, "train", "validation_negatives", tr.validation_negatives);
    tr.threads = read_count(t, "train", "threads", tr.threads);
  }
  c.bpr.seed = c.train.seed;
  if (doc.contains("bpr")) {
    const auto& b = doc.at("bpr");
    check_keys(b, "bpr", {"factors", "epochs", "learning_rate", "reg", "init_stddev", "seed"});
    c.bpr.factors = read_count(b, "bpr", "factors", c.bpr.factors);
    c.bpr.epochs = read_count(b, "bpr", "epochs", c.bpr.epochs);
    read(b, "bpr", "learning_rate", c.bpr.learning_rate);
    read(b, "bpr", "reg", c.bpr.reg);
    read(b, "bpr", "init_stddev", c.bpr.init_stddev);
    read(b, "bpr", "seed", c.bpr.seed);
  }
  if (doc.contains("eval")) {
    const auto& e = doc.at("eval");
    check_keys(e, "eval", {"negatives", "cutoffs", "seed", "cohorts", "threads"});
    c.eval.negatives = read_count(e, "eval", "negatives", c.eval.negatives);
    c.eval.cutoffs = read_widths(e, "eval", "cutoffs", c.eval.cutoffs);
    read(e, "eval", "seed", c.eval.seed);
    read(e, "eval", "cohorts", c.eval.cohorts);
    c.eval.threads = read_count(e, "eval", "threads", c.eval.threads);
  }
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    check_keys(o, "output", {"dir"});
    c.output_dir = read_string(o, "output", "dir", c.output_dir.string());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

json run_config_to_json(const RunConfig& c) {
  const auto& l = c.train.loss;
  const auto& t = c.train;
  return json{
      {"dataset",
       {{"name", c.dataset.name},
        {"path", c.dataset.path.string()},
        {"split", c.dataset.split.string()},
        {"format", std::string(dataset_format_name(c.dataset.format))},
        {"min_user", c.dataset.min_user},
        {"min_item", c.dataset.min_item}}},
      {"model",
       {{"kind", c.kind == ModelKind::jncf ? "jncf" : "bpr"},
        {"user_layers", c.model.user_layers},
        {"item_layers", c.model.item_layers},
        {"di_layers", c.model.di_layers},
        {"fusion", std::string(fusion_name(c.model.fusion))},
        {"feedback_mode", std::string(feedback_name(c.model.feedback))},
        {"init_stddev", c.model.init_stddev}}},
      {"loss",
       {{"alpha", l.alpha},
        {"pairwise", std::string(pairwise_name(l.pairwise))},
        {"pointwise", std::string(pointwise_name(l.pointwise))},
        {"listwise_xe", l.listwise_xe},
        {"negatives", l.negative_count},
        {"lambda", l.lambda_reg},
        {"instance_weight", l.instance_weight}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"seed", t.seed},
        {"eval_every", t.eval_every},
        {"early_stop_patience", t.early_stop_patience},
        {"validation_negatives", t.validation_negatives},
        {"threads", t.threads}}},
      {"bpr",
       {{"factors", c.bpr.factors},
        {"epochs", c.bpr.epochs},
        {"learning_rate", c.bpr.learning_rate},
        {"reg", c.bpr.reg},
        {"init_stddev", c.bpr.init_stddev},
        {"seed", c.bpr.seed}}},
      {"eval",
       {{"negatives", c.eval.negatives},
        {"cutoffs", c.eval.cutoffs},
        {"seed", c.eval.seed},
        {"cohorts", c.eval.cohorts},
        {"threads", c.eval.threads}}},
      {"output", {{"dir", c.output_dir.string()}}},
  };
}

}  // namespace jncf
