#include "gogan/cli/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gogan::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Object reader that remembers which keys were consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class V>
  void get(const char* key, V& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<V>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(label(key) + " has the wrong type");
    }
  }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  Section sub(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, label(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key " + label(k.c_str()));
  }

  std::string label(const char* key = nullptr) const {
    std::string s = where_.empty() ? "" : where_;
    if (key) s += (s.empty() ? "" : ".") + std::string(key);
    return "'" + (s.empty() ? std::string("<root>") : s) + "'";
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string task_name(Task t) { return t == Task::Cantilever ? "cantilever" : "paired-images"; }
std::string precision_name(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }

json generator_json(const net::GeneratorConfig& g) {
  return json{{"base_filters", g.base_filters},   {"filter_cap", g.filter_cap},
              {"depth", g.depth},                 {"dense_widths", g.dense_widths},
              {"dropout_rate", g.dropout_rate},   {"dropout_blocks", g.dropout_blocks},
              {"dropout_at_inference", g.dropout_at_inference}, {"leaky_slope", g.leaky_slope},
              {"norm_momentum", g.norm_momentum}, {"init_stddev", g.init_stddev}};
}

json discriminator_json(const net::DiscriminatorConfig& d) {
  return json{{"base_filters", d.base_filters},   {"filter_cap", d.filter_cap},
              {"stride2_blocks", d.stride2_blocks}, {"leaky_slope", d.leaky_slope},
              {"norm_momentum", d.norm_momentum}, {"init_stddev", d.init_stddev}};
}

json train_json(const train::TrainConfig& t) {
  json sched = json::array();
  for (const auto& e : t.batch_schedule) sched.push_back({e.epoch_start, e.batch_size});
  return json{{"k", t.k},
              {"lambda", t.lambda},
              {"lr", t.lr},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},
              {"epochs", t.epochs},
              {"batch_schedule", sched},
              {"checkpoint_interval", t.checkpoint_interval},
              {"max_steps", t.max_steps},
              {"adversarial_form",
               t.adversarial_form == net::AdversarialForm::NonSaturating ? "non-saturating" : "minimax"},
              {"flip_augment", t.flip_augment},
              {"ema_decay", t.ema_decay}};
}

void read_generator(Section s, net::GeneratorConfig& g) {
  s.get("base_filters", g.base_filters);
  s.get("filter_cap", g.filter_cap);
  s.get("depth", g.depth);
  s.get("dense_widths", g.dense_widths);
  s.get("dropout_rate", g.dropout_rate);
  s.get("dropout_blocks", g.dropout_blocks);
  s.get("dropout_at_inference", g.dropout_at_inference);
  s.get("leaky_slope", g.leaky_slope);
  s.get("norm_momentum", g.norm_momentum);
  s.get("init_stddev", g.init_stddev);
  s.finish();
}

void read_discriminator(Section s, net::DiscriminatorConfig& d) {
  s.get("base_filters", d.base_filters);
  s.get("filter_cap", d.filter_cap);
  s.get("stride2_blocks", d.stride2_blocks);
  s.get("leaky_slope", d.leaky_slope);
  s.get("norm_momentum", d.norm_momentum);
  s.get("init_stddev", d.init_stddev);
  s.finish();
}

void read_train(Section s, train::TrainConfig& t) {
  s.get("k", t.k);
  s.get("lambda", t.lambda);
  s.get("lr", t.lr);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("adam_eps", t.adam_eps);
  s.get("epochs", t.epochs);
  if (s.has("batch_schedule")) {
    std::vector<std::pair<int, int>> raw;
    s.get("batch_schedule", raw);
    t.batch_schedule.clear();
    for (auto [e, n] : raw) t.batch_schedule.push_back({e, n});
  }
  s.get("checkpoint_interval", t.checkpoint_interval);
  s.get("max_steps", t.max_steps);
  if (s.has("adversarial_form")) {
    std::string f;
    s.get("adversarial_form", f);
    if (f == "non-saturating")
      t.adversarial_form = net::AdversarialForm::NonSaturating;
    else if (f == "minimax")
      t.adversarial_form = net::AdversarialForm::Minimax;
    else
      throw ConfigError("'train.adversarial_form' must be \"non-saturating\" or \"minimax\"");
  }
  s.get("flip_augment", t.flip_augment);
  s.get("ema_decay", t.ema_decay);
  s.finish();
}

json model_json(const ExperimentConfig& c) {
  json conds = json::array();
  for (const auto& s : c.conditions) conds.push_back({{"name", s.name}, {"min", s.min}, {"max", s.max}});
  const auto& cs = c.cantilever;
  return json{{"task", task_name(c.task)},
              {"precision", precision_name(c.precision)},
              {"seed", c.seed},
              {"resolution", c.resolution},
              {"domain", {{"nelx", cs.domain.nelx}, {"nely", cs.domain.nely}}},
              {"material", {{"e0", cs.material.e0}, {"emin", cs.material.emin}, {"penal", cs.material.penal},
                            {"load", cs.load}}},
              {"simp", {{"rmin", cs.optimize.rmin}, {"max_iters", cs.optimize.max_iters}, {"tol", cs.optimize.tol},
                        {"move", cs.optimize.oc.move}, {"eta", cs.optimize.oc.eta}}},
              {"conditions", conds},
              {"generator", generator_json(c.generator)},
              {"discriminator", discriminator_json(c.discriminator)},
              {"train", train_json(c.train)}};
}

}  // namespace

std::vector<std::pair<double, double>> default_grid() {
  std::vector<std::pair<double, double>> g;
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j) g.emplace_back(0.25 + 0.05 * i, 0.2 + 0.05 * j);
  // Snap to the nearest hundredth so ids and file names are stable.
  for (auto& [v, n] : g) {
    v = std::round(v * 100) / 100;
    n = std::round(n * 100) / 100;
  }
  return g;
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section root(j, "");

  if (root.has("task")) {
    std::string t;
    root.get("task", t);
    if (t == "cantilever")
      c.task = Task::Cantilever;
    else if (t == "paired-images")
      c.task = Task::PairedImages;
    else
      throw ConfigError("'task' must be \"cantilever\" or \"paired-images\"");
  }
  if (root.has("precision")) {
    std::string p;
    root.get("precision", p);
    if (p == "float32")
      c.precision = Precision::Float32;
    else if (p == "float64")
      c.precision = Precision::Float64;
    else
      throw ConfigError("'precision' must be \"float32\" or \"float64\"");
  }
  root.get("seed", c.seed);
  root.get("resolution", c.resolution);

  {
    auto s = root.sub("domain");
    s.get("nelx", c.cantilever.domain.nelx);
    s.get("nely", c.cantilever.domain.nely);
    s.finish();
  }
  {
    auto s = root.sub("material");
    s.get("e0", c.cantilever.material.e0);
    s.get("emin", c.cantilever.material.emin);
    s.get("penal", c.cantilever.material.penal);
    s.get("load", c.cantilever.load);
    s.finish();
  }
  {
    auto s = root.sub("simp");
    s.get("rmin", c.cantilever.optimize.rmin);
    s.get("max_iters", c.cantilever.optimize.max_iters);
    s.get("tol", c.cantilever.optimize.tol);
    s.get("move", c.cantilever.optimize.oc.move);
    s.get("eta", c.cantilever.optimize.oc.eta);
    s.finish();
  }
  if (root.has("conditions")) {
    const json& arr = root.raw("conditions");
    if (!arr.is_array()) throw ConfigError("'conditions' must be a list");
    c.conditions.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section s(arr[i], "conditions[" + std::to_string(i) + "]");
      codec::ConditionSpec spec;
      s.get("name", spec.name);
      s.get("min", spec.min);
      s.get("max", spec.max);
      s.finish();
      c.conditions.push_back(spec);
    }
  }
  {
    auto s = root.sub("dataset");
    s.get("pairs", c.dataset.pairs);
    s.get("bit_depth", c.dataset.bit_depth);
    s.get("inverted", c.dataset.inverted);
    s.get("workers", c.dataset.workers);
    s.finish();
  }
  read_generator(root.sub("generator"), c.generator);
  read_discriminator(root.sub("discriminator"), c.discriminator);
  read_train(root.sub("train"), c.train);
  {
    auto s = root.sub("paths");
    s.get("out", c.paths.out);
    s.get("dataset", c.paths.dataset);
    s.get("run", c.paths.run);
    s.finish();
  }
  {
    auto s = root.sub("eval");
    if (s.has("mode")) {
      std::string m;
      s.get("mode", m);
      if (m == "continuous")
        c.eval.mode = eval::ThresholdMode::Continuous;
      else if (m == "binary")
        c.eval.mode = eval::ThresholdMode::Binary;
      else
        throw ConfigError("'eval.mode' must be \"continuous\" or \"binary\"");
    }
    s.get("threshold", c.eval.threshold);
    s.finish();
  }
  root.finish();

  if (fs::path(c.paths.out).is_relative()) c.paths.out = (fs::path(base_dir) / c.paths.out).lexically_normal().string();
  c.finalize();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto base = fs::path(path).parent_path();
  return parse_config(ss.str(), base.empty() ? "." : base.string());
}

ExperimentConfig config_from_model_text(const std::string& text) { return parse_config(text, "."); }

void ExperimentConfig::finalize() {
  generator.resolution = resolution;
  discriminator.resolution = resolution;
  generator.in_channels = static_cast<int>(conditions.size());
  discriminator.condition_channels = static_cast<int>(conditions.size());
  train.seed = seed;
  train.checkpoint_path = checkpoint_path();
  validate();
}

void ExperimentConfig::validate() const {
  try {
    if (resolution < 16 || (resolution & (resolution - 1)) != 0)
      throw ConfigError("'resolution' must be a power of two >= 16, got " + std::to_string(resolution));
    if (conditions.empty()) throw ConfigError("'conditions' must declare at least one condition");
    std::set<std::string> names;
    for (const auto& s : conditions) {
      s.validate();
      if (!names.insert(s.name).second) throw ConfigError("duplicate condition name '" + s.name + "'");
    }
    if (task == Task::Cantilever) {
      if (!names.count("vf") || !names.count("nu"))
        throw ConfigError("the cantilever task needs conditions named 'vf' and 'nu'");
      cantilever.domain.validate();
      auto m = cantilever.material;
      m.validate();
      if (!(cantilever.optimize.rmin >= 1.0)) throw ConfigError("'simp.rmin' must be >= 1");
      if (cantilever.optimize.max_iters < 1) throw ConfigError("'simp.max_iters' must be >= 1");
      for (const auto& [vf, nu] : dataset.pairs) {
        if (!(vf > 0 && vf < 1)) throw ConfigError("dataset pair volume fraction " + std::to_string(vf) + " not in (0,1)");
        for (const auto& s : conditions) {
          const double v = s.name == "vf" ? vf : s.name == "nu" ? nu : s.min;
          if (!s.contains(v))
            throw ConfigError("dataset pair value " + std::to_string(v) + " outside the range of condition '" +
                              s.name + "'");
        }
      }
    }
    if (dataset.bit_depth != 8 && dataset.bit_depth != 16) throw ConfigError("'dataset.bit_depth' must be 8 or 16");
    if (dataset.workers < 0) throw ConfigError("'dataset.workers' must be >= 0");
    if (!(eval.threshold >= 0 && eval.threshold <= 1)) throw ConfigError("'eval.threshold' must lie in [0,1]");
    generator.validate();
    discriminator.validate();
    train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::model_text() const { return model_json(*this).dump(2); }

std::string ExperimentConfig::dataset_dir() const { return (fs::path(paths.out) / paths.dataset).string(); }
std::string ExperimentConfig::manifest_path() const {
  return (fs::path(dataset_dir()) / "manifest.jsonl").string();
}
std::string ExperimentConfig::run_dir() const { return (fs::path(paths.out) / paths.run).string(); }
std::string ExperimentConfig::checkpoint_path() const { return (fs::path(run_dir()) / "checkpoint.gog").string(); }
std::string ExperimentConfig::loss_csv_path() const { return (fs::path(run_dir()) / "loss.csv").string(); }

std::size_t ExperimentConfig::condition_index(const std::string& name) const {
  for (std::size_t i = 0; i < conditions.size(); ++i)
    if (conditions[i].name == name) return i;
  throw ConfigError("no condition named '" + name + "'");
}

}  // namespace gogan::cli
