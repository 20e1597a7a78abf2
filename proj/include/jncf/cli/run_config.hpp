#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jncf/baselines/baselines.hpp"
#include "jncf/data/loader.hpp"
#include "jncf/model/jncf_model.hpp"
#include "jncf/trainer/trainer.hpp"

namespace jncf {

enum class ModelKind { jncf, bpr };

struct DatasetSection {
  std::string name = "dataset";
  std::filesystem::path path;   // raw ratings file
  std::filesystem::path split;  // prepared split; takes priority over path
  DatasetFormat format = DatasetFormat::ml100k;
  std::size_t min_user = 0;
  std::size_t min_item = 0;
};

struct EvalSection {
  std::size_t negatives = 100;
  std::vector<std::size_t> cutoffs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t seed = 12345;
  std::vector<double> cohorts;
  std::size_t threads = 1;
};

struct RunConfig {
  DatasetSection dataset;
  ModelKind kind = ModelKind::jncf;
  ModelConfig model;
  TrainConfig train;
  BprConfig bpr;
  EvalSection eval;
  std::filesystem::path output_dir = "run";

  // Cross-module checks; throws ConfigError naming the offending field.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys and wrong types are
// ConfigErrors naming the field.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace jncf
