#include "gogan/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "gogan/codec/condition_codec.hpp"
#include "gogan/net/networks.hpp"
#include "gogan/train/checkpoint.hpp"

namespace gogan::cli {

namespace fs = std::filesystem;

int guarded(std::ostream& err, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const io::ManifestError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const codec::RangeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const train::CheckpointMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

namespace {

std::string pair_label(double vf, double nu) {
  std::ostringstream s;
  s << "vf=" << vf << ",nu=" << nu;
  return s.str();
}

void check_pair(const ExperimentConfig& config, double vf, double nu) {
  const auto& vs = config.conditions[config.condition_index("vf")];
  const auto& ns = config.conditions[config.condition_index("nu")];
  if (!vs.contains(vf) || !(vf > 0 && vf < 1))
    throw ConfigError("vf (volume fraction) " + std::to_string(vf) + " outside [" + std::to_string(vs.min) + ", " +
                      std::to_string(vs.max) + "] or not in (0,1)");
  if (!ns.contains(nu))
    throw ConfigError("nu (Poisson ratio) " + std::to_string(nu) + " outside [" + std::to_string(ns.min) + ", " +
                      std::to_string(ns.max) + "]");
}

// Values in the config's condition order.
std::vector<std::pair<codec::ConditionSpec, double>> condition_values(
    const ExperimentConfig& config, const std::vector<std::pair<std::string, double>>& named) {
  std::vector<std::pair<codec::ConditionSpec, double>> out;
  for (const auto& spec : config.conditions) {
    auto it = std::find_if(named.begin(), named.end(), [&](const auto& p) { return p.first == spec.name; });
    if (it == named.end()) throw ConfigError("missing value for condition '" + spec.name + "'");
    out.emplace_back(spec, it->second);
  }
  return out;
}

template <class T>
ad::Tensor<T> condition_tensor(const ExperimentConfig& config,
                               const std::vector<std::pair<std::string, double>>& named) {
  const int R = config.resolution;
  const auto stack = codec::encode_conditions(condition_values(config, named), R, R);
  const auto C = config.conditions.size();
  return ad::Tensor<T>({1, C, static_cast<std::size_t>(R), static_cast<std::size_t>(R)}, stack.planes<T>());
}

// Generator restored from a checkpoint, with its own config.
template <class T>
struct LoadedGenerator {
  ExperimentConfig config;
  net::Generator<T> generator;

  LoadedGenerator(ExperimentConfig c, const std::string& path) : config(std::move(c)), generator(config.generator) {
    train::load_generator(path, generator);
  }

  io::Grayscale run(const std::vector<std::pair<std::string, double>>& named, ad::Rng& rng) {
    auto x = condition_tensor<T>(config, named);
    ad::NoGradScope<T> off;
    auto y = generator.forward(x, false, rng);
    std::vector<double> v(y.values().begin(), y.values().end());
    // Float rounding can nudge tanh a hair past the bound.
    for (double& p : v) p = std::clamp(p, -1.0, 1.0);
    return io::from_signed(v, config.resolution, config.resolution);
  }
};

ExperimentConfig checkpoint_config(const std::string& path, train::DType* dtype = nullptr) {
  const auto info = train::inspect_checkpoint(path);
  if (dtype) *dtype = info.dtype;
  return config_from_model_text(info.config_text);
}

}  // namespace

GenerateResult generate_dataset(const ExperimentConfig& config, std::vector<std::pair<double, double>> pairs,
                                std::ostream& log) {
  if (config.task != Task::Cantilever) throw ConfigError("generate is only defined for the cantilever task");
  if (pairs.empty()) pairs = config.dataset.pairs.empty() ? default_grid() : config.dataset.pairs;
  for (const auto& [vf, nu] : pairs) check_pair(config, vf, nu);

  const fs::path dir = config.dataset_dir();
  fs::create_directories(dir / "images");
  const auto& setup = config.cantilever;
  const auto bcs = simp::cantilever_bcs(setup.domain, setup.load);

  struct Slot {
    std::optional<io::ManifestRecord> record;
    std::string reason;
  };
  std::vector<Slot> slots(pairs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pairs.size();) {
      const auto [vf, nu] = pairs[i];
      char id[32];
      std::snprintf(id, sizeof id, "s%04zu", i);
      try {
        auto opts = setup.optimize;
        opts.vstar = vf;
        const auto res = simp::optimize(setup.domain, setup.material_for(nu), bcs, opts);
        if (!res.converged) {
          slots[i].reason = "no convergence within " + std::to_string(res.iterations) + " iterations";
        } else {
          io::ManifestRecord r;
          r.id = id;
          for (const auto& spec : config.conditions)
            r.conditions.emplace_back(spec.name, spec.name == "vf" ? vf : nu);
          r.image = "images/" + r.id + ".pgm";
          r.c_act = res.final_compliance;
          r.volume = res.xphys.mean();
          r.iterations = res.iterations;
          r.converged = true;
          const auto img = io::density_to_image(res.xphys, config.resolution, config.resolution);
          io::write_pgm((dir / r.image).string(), img, {config.dataset.bit_depth, config.dataset.inverted});
          slots[i].record = std::move(r);
        }
      } catch (const std::exception& e) {
        slots[i].reason = e.what();
      }
      std::lock_guard lock(log_mutex);
      if (slots[i].record)
        log << id << ' ' << pair_label(vf, nu) << " C=" << slots[i].record->c_act
            << " iters=" << slots[i].record->iterations << '\n';
      else
        log << id << ' ' << pair_label(vf, nu) << " skipped: " << slots[i].reason << '\n';
    }
  };

  unsigned workers = config.dataset.workers > 0 ? static_cast<unsigned>(config.dataset.workers)
                                                : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(pairs.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  GenerateResult out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].record)
      out.records.push_back(std::move(*slots[i].record));
    else
      out.skipped.push_back(pair_label(pairs[i].first, pairs[i].second) + ": " + slots[i].reason);
  }
  if (!pairs.empty() && out.records.empty()) throw std::runtime_error("every condition failed; no dataset written");
  io::write_manifest(config.manifest_path(), out.records);
  return out;
}

std::vector<train::TrainSample> load_samples(const ExperimentConfig& config, const std::string& manifest_path) {
  if (!fs::exists(manifest_path)) throw ConfigError("manifest " + manifest_path + " not found");
  const auto records = io::read_manifest(manifest_path);
  io::validate_manifest(manifest_path, records, config.resolution, config.task == Task::Cantilever);
  std::vector<train::TrainSample> samples;
  const int R = config.resolution;
  for (const auto& r : records) {
    train::TrainSample s;
    s.id = r.id;
    s.channels = static_cast<int>(config.conditions.size());
    s.resolution = R;
    const auto values = condition_values(config, r.conditions);
    for (const auto& [spec, v] : values) s.values.push_back(v);
    s.conditions = codec::encode_conditions(values, R, R).planes<double>();
    s.target = io::to_signed(io::read_image(io::resolve_image_path(manifest_path, r), config.dataset.inverted));
    samples.push_back(std::move(s));
  }
  return samples;
}

namespace {

template <class T>
TrainOutcome train_impl(const ExperimentConfig& config, bool resume, std::ostream& log) {
  const auto samples = load_samples(config, config.manifest_path());
  if (samples.empty()) throw ConfigError("manifest " + config.manifest_path() + " has no samples");
  net::Generator<T> g(config.generator);
  net::Discriminator<T> d(config.discriminator);
  train::Trainer<T> trainer(g, d, config.train);
  const std::string text = config.model_text();
  const std::string ckpt = config.checkpoint_path();

  bool resumed = false;
  if (resume && fs::exists(ckpt)) {
    train::load_checkpoint(ckpt, trainer, train::fnv1a64(text));
    resumed = true;
    log << "resuming from " << ckpt << " at step " << trainer.state().global_step << ", epoch "
        << trainer.state().epoch << '\n';
  }
  fs::create_directories(config.run_dir());
  auto t0 = std::chrono::steady_clock::now();
  const auto curve = trainer.train(samples, [&](const train::Trainer<T>& t) {
    train::save_checkpoint(ckpt, t, text);
    log << "checkpoint at step " << t.state().global_step << " (epoch " << t.state().epoch << ")\n";
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  train::write_loss_csv(config.loss_csv_path(), curve, resumed);
  if (!curve.empty()) {
    const auto& last = curve.back();
    log << "trained " << curve.size() << " steps in " << std::fixed << std::setprecision(1) << secs
        << " s; last d_loss=" << std::setprecision(4) << last.d_loss << " g_adv=" << last.g_adv
        << " g_l1=" << last.g_l1 << std::defaultfloat << '\n';
  }
  return {curve, trainer.state().global_step, trainer.state().d_updates, trainer.state().g_updates};
}

template <class T>
InferResult infer_impl(const ExperimentConfig& config, const InferOptions& options) {
  LoadedGenerator<T> lg(config, options.checkpoint);
  ad::Rng rng(options.seed);
  InferResult out;
  const auto t0 = std::chrono::steady_clock::now();
  out.image = lg.run(options.values, rng);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

template <class T>
eval::DesignFn generator_design(const ExperimentConfig& config, const std::string& checkpoint, std::uint64_t seed) {
  auto lg = std::make_shared<LoadedGenerator<T>>(config, checkpoint);
  auto rng = std::make_shared<ad::Rng>(seed);
  return [lg, rng](const eval::EvalCondition& c) { return lg->run({{"vf", c.vf}, {"nu", c.nu}}, *rng); };
}

}  // namespace

TrainOutcome train_from_config(const ExperimentConfig& config, bool resume, std::ostream& log) {
  if (config.precision == Precision::Float32) return train_impl<float>(config, resume, log);
  return train_impl<double>(config, resume, log);
}

InferResult infer(const InferOptions& options) {
  train::DType dtype;
  const auto config = checkpoint_config(options.checkpoint, &dtype);
  InferResult r = dtype == train::DType::F32 ? infer_impl<float>(config, options) : infer_impl<double>(config, options);
  if (!options.out.empty()) {
    const fs::path p(options.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    if (p.extension() == ".png")
      io::write_png(options.out, r.image, options.inverted);
    else
      io::write_pgm(options.out, r.image, {options.bit_depth, options.inverted});
  }
  return r;
}

std::vector<eval::EvalRecord> evaluate_from_config(const ExperimentConfig& config, const EvalOptions& options,
                                                   std::ostream& log) {
  if (config.task != Task::Cantilever) throw ConfigError("eval needs the cantilever physics oracle");
  eval::OracleCache oracle(config.cantilever);
  std::vector<eval::EvalCondition> conditions;
  std::map<std::string, io::Grayscale> truth_images;

  std::string manifest = options.manifest;
  if (manifest.empty() && options.pairs.empty()) manifest = config.manifest_path();
  if (!manifest.empty()) {
    if (!fs::exists(manifest)) throw ConfigError("manifest " + manifest + " not found");
    const auto records = io::read_manifest(manifest);
    io::validate_manifest(manifest, records, config.resolution, true);
    std::set<std::string> wanted(options.ids.begin(), options.ids.end());
    std::set<std::string> seen;
    for (const auto& r : records) {
      if (!wanted.empty() && !wanted.count(r.id)) continue;
      seen.insert(r.id);
      const auto vf = r.condition("vf"), nu = r.condition("nu");
      if (!vf || !nu) throw io::ManifestError("sample '" + r.id + "' lacks vf or nu");
      const auto img = io::read_image(io::resolve_image_path(manifest, r), config.dataset.inverted);
      const auto& d = config.cantilever.domain;
      if (!oracle.contains(*vf, *nu))
        oracle.insert(*vf, *nu, {io::image_to_density(img, d.nelx, d.nely), r.c_act, r.volume});
      truth_images[r.id] = img;
      conditions.push_back({r.id, *vf, *nu});
    }
    for (const auto& id : wanted)
      if (!seen.count(id)) log << "warning: sample id '" << id << "' is not in the manifest\n";
  }
  int extra = 0;
  for (const auto& [vf, nu] : options.pairs) {
    check_pair(config, vf, nu);
    conditions.push_back({"pair" + std::to_string(extra++), vf, nu});
  }

  eval::DesignFn design;
  if (options.ground_truth) {
    design = [&](const eval::EvalCondition& c) {
      auto it = truth_images.find(c.id);
      if (it != truth_images.end()) return it->second;
      return io::density_to_image(oracle.get(c.vf, c.nu).xphys, config.resolution, config.resolution);
    };
  } else if (!conditions.empty()) {
    const std::string ckpt = options.checkpoint.empty() ? config.checkpoint_path() : options.checkpoint;
    train::DType dtype;
    const auto model = checkpoint_config(ckpt, &dtype);
    if (model.resolution != config.resolution)
      throw ConfigError("checkpoint resolution " + std::to_string(model.resolution) + " differs from config " +
                        std::to_string(config.resolution));
    design = dtype == train::DType::F32 ? generator_design<float>(model, ckpt, options.seed)
                                        : generator_design<double>(model, ckpt, options.seed);
  }

  eval::EvaluateOptions eo;
  eo.mode = config.eval.mode;
  eo.threshold = config.eval.threshold;
  eo.output_dir = options.out_dir.empty() ? (fs::path(config.run_dir()) / "eval").string() : options.out_dir;
  eo.inverted_palette = config.dataset.inverted;
  const auto records = eval::evaluate(design, conditions, oracle, eo);

  log << std::left << std::setw(10) << "id" << std::setw(7) << "vf" << std::setw(7) << "nu" << std::setw(10)
      << "V_gan" << std::setw(11) << "V_err%" << std::setw(12) << "C_act" << std::setw(12) << "C_gan"
      << "C_err%\n";
  for (const auto& r : records)
    log << std::setw(10) << r.id << std::setw(7) << r.vf << std::setw(7) << r.nu << std::setw(10)
        << std::setprecision(4) << r.v_gan << std::setw(11) << r.v_err << std::setw(12) << r.c_act << std::setw(12)
        << r.c_gan << r.c_err << '\n';
  log << std::right << std::setprecision(6);
  if (records.empty()) log << "no conditions evaluated\n";
  return records;
}

void describe_checkpoint(const std::string& path, std::ostream& out) {
  const auto info = train::inspect_checkpoint(path);
  std::size_t scalars = 0;
  for (const auto& t : info.tensors) {
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    scalars += n;
  }
  out << "checkpoint   " << path << '\n'
      << "version      " << info.version << '\n'
      << "fingerprint  " << std::hex << std::setw(16) << std::setfill('0') << info.fingerprint << std::dec
      << std::setfill(' ') << '\n'
      << "precision    " << (info.dtype == train::DType::F32 ? "float32" : "float64") << '\n'
      << "epoch        " << info.epoch << '\n'
      << "step         " << info.global_step << '\n'
      << "d_updates    " << info.d_updates << '\n'
      << "g_updates    " << info.g_updates << '\n'
      << "tensors      " << info.tensors.size() << " (" << scalars << " values)\n";
  for (const auto& t : info.tensors) {
    out << "  " << t.name << " [";
    for (std::size_t i = 0; i < t.shape.size(); ++i) out << (i ? "," : "") << t.shape[i];
    out << "]\n";
  }
  out << "config\n" << info.config_text << '\n';
}

}  // namespace gogan::cli
