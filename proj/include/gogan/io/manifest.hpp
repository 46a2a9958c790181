#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gogan::io {

struct ManifestRecord {
  std::string id;
  // Condition values in declaration order, e.g. {("vf", 0.25), ("nu", 0.4)}.
  std::vector<std::pair<std::string, double>> conditions;
  // Relative to the manifest's directory unless absolute.
  std::string image;
  double c_act = 0.0;
  double volume = 0.0;
  int iterations = 0;
  bool converged = true;

  std::optional<double> condition(const std::string& name) const;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON object per line. A CSV mirror with the same stem is written next to it.
void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> read_manifest(const std::string& path);

/// Resolves a record's image path against the manifest location.
std::string resolve_image_path(const std::string& manifest_path, const ManifestRecord& record);

/// Unique ids, images present with size resolution x resolution, c_act > 0
/// when `require_compliance`. Throws ManifestError naming the record.
void validate_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records, int resolution,
                       bool require_compliance);

}  // namespace gogan::io
