#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gogan/codec/condition_codec.hpp"
#include "gogan/eval/metrics.hpp"
#include "gogan/net/config.hpp"
#include "gogan/train/trainer.hpp"

namespace gogan::cli {

/// Bad or inconsistent configuration; commands map it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { Cantilever, PairedImages };
enum class Precision { Float32, Float64 };

struct DatasetConfig {
  // Explicit (vf, nu) list; empty selects default_grid().
  std::vector<std::pair<double, double>> pairs;
  int bit_depth = 8;
  bool inverted = false;
  // Worker threads for generation; 0 uses the hardware concurrency.
  int workers = 0;
};

struct PathConfig {
  std::string out = ".";
  std::string dataset = "dataset";
  std::string run = "run";
};

struct EvalConfig {
  eval::ThresholdMode mode = eval::ThresholdMode::Continuous;
  double threshold = 0.5;
};

struct ExperimentConfig {
  Task task = Task::Cantilever;
  Precision precision = Precision::Float64;
  std::uint64_t seed = 0;
  int resolution = 64;
  eval::CantileverSetup cantilever;
  std::vector<codec::ConditionSpec> conditions{{"vf", 0.0, 1.0}, {"nu", 0.2, 0.5}};
  DatasetConfig dataset;
  net::GeneratorConfig generator;
  net::DiscriminatorConfig discriminator;
  train::TrainConfig train;
  PathConfig paths;
  EvalConfig eval;

  /// Copies resolution, seed and channel counts into the sub-configs, then validates.
  void finalize();
  void validate() const;

  /// Canonical text of everything that shapes the trained model (task,
  /// precision, seed, resolution, conditions, networks, training). Stored in
  /// checkpoints; its hash is the config fingerprint.
  std::string model_text() const;

  std::string dataset_dir() const;
  std::string manifest_path() const;
  std::string run_dir() const;
  std::string checkpoint_path() const;
  std::string loss_csv_path() const;

  std::size_t condition_index(const std::string& name) const;
};

/// Default training grid: vf in {0.25, 0.30, ..., 0.55}
/// crossed with nu in {0.20, 0.25, ..., 0.50}.
std::vector<std::pair<double, double>> default_grid();

/// Parses JSON; unknown keys are errors. Relative paths.out resolves against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Rebuilds the model-relevant part of a config from model_text().
ExperimentConfig config_from_model_text(const std::string& text);

}  // namespace gogan::cli
