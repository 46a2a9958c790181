#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gogan/cli/config.hpp"
#include "gogan/io/manifest.hpp"
#include "gogan/train/trainer.hpp"

namespace gogan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs `fn`, mapping ConfigError, range and argument errors to kExitUsage and
/// any other exception to kExitRuntime. Messages go to `err`.
int guarded(std::ostream& err, const std::function<int()>& fn);

struct GenerateResult {
  std::vector<io::ManifestRecord> records;
  std::vector<std::string> skipped;  // "vf=..,nu=..: reason"
};

/// Solves SIMP for every (vf, nu) pair (config pairs, or default_grid() when
/// empty), writes images and the manifest. Pairs are validated before any solve.
GenerateResult generate_dataset(const ExperimentConfig& config, std::vector<std::pair<double, double>> pairs,
                                std::ostream& log);

/// Manifest records to training samples (encoded conditions, signed target image).
std::vector<train::TrainSample> load_samples(const ExperimentConfig& config, const std::string& manifest_path);

struct TrainOutcome {
  std::vector<train::StepMetrics> curve;
  std::int64_t global_step = 0;
  std::int64_t d_updates = 0;
  std::int64_t g_updates = 0;
};

/// Trains from the manifest; with `resume` and an existing checkpoint the run
/// continues from it. Writes the checkpoint and loss CSV into the run directory.
TrainOutcome train_from_config(const ExperimentConfig& config, bool resume, std::ostream& log);

struct InferOptions {
  std::string checkpoint;
  std::vector<std::pair<std::string, double>> values;  // by condition name
  std::uint64_t seed = 0;
  std::string out;  // .pgm or .png; empty skips writing
  int bit_depth = 8;
  bool inverted = false;
};

struct InferResult {
  io::Grayscale image;
  double seconds = 0.0;
};

InferResult infer(const InferOptions& options);

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  // Only these sample ids when non-empty.
  std::vector<std::string> ids;
  // Extra (vf, nu) conditions solved on demand.
  std::vector<std::pair<double, double>> pairs;
  // Score the manifest's ground-truth images instead of generator output.
  bool ground_truth = false;
  std::string out_dir;
  std::uint64_t seed = 0;
};

std::vector<eval::EvalRecord> evaluate_from_config(const ExperimentConfig& config, const EvalOptions& options,
                                                   std::ostream& log);

/// Human-readable checkpoint summary.
void describe_checkpoint(const std::string& path, std::ostream& out);

/// Entry point shared by the executable and tests.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gogan::cli
