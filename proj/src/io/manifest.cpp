#include "gogan/io/manifest.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gogan/io/image.hpp"
#include "json.hpp"

namespace gogan::io {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::optional<double> ManifestRecord::condition(const std::string& name) const {
  for (const auto& [k, v] : conditions)
    if (k == name) return v;
  return std::nullopt;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ManifestError("cannot write manifest " + path);
  for (const auto& r : records) {
    ordered_json j;
    j["id"] = r.id;
    ordered_json conds = ordered_json::object();
    for (const auto& [k, v] : r.conditions) conds[k] = v;
    j["conditions"] = conds;
    j["image"] = r.image;
    j["c_act"] = r.c_act;
    j["volume"] = r.volume;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    out << j.dump() << '\n';
  }

  fs::path csv = p;
  csv.replace_extension(".csv");
  std::ofstream c(csv, std::ios::trunc);
  if (!c) throw ManifestError("cannot write manifest mirror " + csv.string());
  c << "id";
  if (!records.empty())
    for (const auto& [k, v] : records.front().conditions) c << ',' << k;
  c << ",image,c_act,volume,iterations,converged\n";
  for (const auto& r : records) {
    c << r.id;
    for (const auto& [k, v] : r.conditions) c << ',' << num(v);
    c << ',' << r.image << ',' << num(r.c_act) << ',' << num(r.volume) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
      << '\n';
  }
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path);
  std::vector<ManifestRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = ordered_json::parse(line);
      ManifestRecord r;
      r.id = j.at("id").get<std::string>();
      for (const auto& [k, v] : j.at("conditions").items()) r.conditions.emplace_back(k, v.get<double>());
      r.image = j.at("image").get<std::string>();
      r.c_act = j.value("c_act", 0.0);
      r.volume = j.value("volume", 0.0);
      r.iterations = j.value("iterations", 0);
      r.converged = j.value("converged", true);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string resolve_image_path(const std::string& manifest_path, const ManifestRecord& record) {
  const fs::path img(record.image);
  if (img.is_absolute()) return img.string();
  return (fs::path(manifest_path).parent_path() / img).string();
}

void validate_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records, int resolution,
                       bool require_compliance) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw ManifestError("duplicate sample id '" + r.id + "'");
    if (require_compliance && !(r.c_act > 0))
      throw ManifestError("sample '" + r.id + "' has no positive compliance");
    const auto path = resolve_image_path(manifest_path, r);
    if (!fs::exists(path)) throw ManifestError("sample '" + r.id + "': image " + path + " not found");
    const auto img = read_image(path);
    if (img.height != resolution || img.width != resolution)
      throw ManifestError("sample '" + r.id + "': image is " + std::to_string(img.height) + "x" +
                          std::to_string(img.width) + ", expected " + std::to_string(resolution) + "x" +
                          std::to_string(resolution));
  }
}

}  // namespace gogan::io
