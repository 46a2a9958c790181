#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "gogan/cli/commands.hpp"

namespace gogan::cli {

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> resolution;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment config (JSON)");
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_option("--out", c.out, "Override the output directory");
  cmd->add_option("--resolution", c.resolution, "Override the image resolution");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? parse_config("{}", ".") : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.resolution) cfg.resolution = *c.resolution;
  if (!c.out.empty()) cfg.paths.out = c.out;
  cfg.finalize();
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional GAN toolkit for SIMP cantilever topologies"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c;

  auto* gen = app.add_subcommand("generate", "Solve SIMP ground truths and write the dataset");
  add_common(gen, gen_c);
  std::optional<double> gen_vf, gen_nu;
  gen->add_option("--vf", gen_vf, "Single volume fraction (with --nu)");
  gen->add_option("--nu", gen_nu, "Single Poisson ratio (with --vf)");

  auto* trn = app.add_subcommand("train", "Train the networks on the dataset manifest");
  add_common(trn, train_c);
  bool resume = false;
  trn->add_flag("--resume", resume, "Continue from the run's checkpoint if present");

  auto* inf = app.add_subcommand("infer", "Generate one design from a checkpoint");
  std::string inf_config, inf_ckpt, inf_out;
  double inf_vf = 0, inf_nu = 0;
  std::uint64_t inf_seed = 0;
  std::optional<double> inf_threshold;
  int inf_bits = 8;
  inf->add_option("--config", inf_config, "Config whose run directory holds the checkpoint");
  inf->add_option("--checkpoint", inf_ckpt, "Checkpoint file");
  inf->add_option("--vf", inf_vf, "Volume fraction")->required();
  inf->add_option("--nu", inf_nu, "Poisson ratio")->required();
  inf->add_option("--seed", inf_seed, "Seed for any sampling at inference");
  inf->add_option("--out", inf_out, "Output image (.pgm or .png)");
  inf->add_option("--binary-threshold", inf_threshold, "Write a thresholded black/white image");
  inf->add_option("--bit-depth", inf_bits, "PGM bit depth (8 or 16)");

  auto* evl = app.add_subcommand("eval", "Score generated designs against the SIMP oracle");
  add_common(evl, eval_c);
  std::string ev_ckpt, ev_manifest;
  std::vector<std::string> ev_ids;
  bool ev_truth = false;
  std::optional<double> ev_vf, ev_nu, ev_threshold;
  evl->add_option("--checkpoint", ev_ckpt, "Checkpoint file (default: the run's)");
  evl->add_option("--manifest", ev_manifest, "Manifest to evaluate (default: the dataset's)");
  evl->add_option("--ids", ev_ids, "Only these sample ids")->delimiter(',');
  evl->add_flag("--ground-truth", ev_truth, "Score the ground-truth images themselves");
  evl->add_option("--vf", ev_vf, "Extra condition solved on demand (with --nu)");
  evl->add_option("--nu", ev_nu, "Extra condition solved on demand (with --vf)");
  evl->add_option("--binary-threshold", ev_threshold, "Binary density conversion at this level");

  auto* ins = app.add_subcommand("inspect-checkpoint", "Print a checkpoint's header and tensor directory");
  std::string ins_path;
  ins->add_option("checkpoint", ins_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (gen->parsed()) {
    return guarded(err, [&] {
      if (gen_vf.has_value() != gen_nu.has_value()) throw ConfigError("--vf and --nu go together");
      const auto cfg = resolve(gen_c);
      std::vector<std::pair<double, double>> pairs;
      if (gen_vf) pairs.emplace_back(*gen_vf, *gen_nu);
      const auto res = generate_dataset(cfg, pairs, out);
      out << res.records.size() << " samples written to " << cfg.manifest_path();
      if (!res.skipped.empty()) out << " (" << res.skipped.size() << " skipped)";
      out << '\n';
      return kExitOk;
    });
  }
  if (trn->parsed()) {
    return guarded(err, [&] {
      const auto cfg = resolve(train_c);
      const auto res = train_from_config(cfg, resume, out);
      out << "checkpoint " << cfg.checkpoint_path() << "\nloss curve " << cfg.loss_csv_path() << '\n'
          << "generator updates " << res.g_updates << ", discriminator updates " << res.d_updates << '\n';
      return kExitOk;
    });
  }
  if (inf->parsed()) {
    return guarded(err, [&] {
      InferOptions o;
      o.checkpoint = inf_ckpt;
      if (o.checkpoint.empty()) {
        if (inf_config.empty()) throw ConfigError("infer needs --checkpoint or --config");
        o.checkpoint = load_config(inf_config).checkpoint_path();
      }
      o.values = {{"vf", inf_vf}, {"nu", inf_nu}};
      o.seed = inf_seed;
      o.bit_depth = inf_bits;
      if (inf_bits != 8 && inf_bits != 16) throw ConfigError("--bit-depth must be 8 or 16");
      std::string target = inf_out;
      o.out.clear();
      auto r = infer(o);
      if (inf_threshold) {
        if (*inf_threshold < 0 || *inf_threshold > 1) throw ConfigError("--binary-threshold must lie in [0,1]");
        for (double& p : r.image.pixels) p = p >= *inf_threshold ? 1.0 : 0.0;
      }
      if (target.empty()) target = "design.pgm";
      const std::filesystem::path p(target);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      if (p.extension() == ".png")
        io::write_png(target, r.image);
      else
        io::write_pgm(target, r.image, {inf_bits, false});
      out << "wrote " << target << " (" << r.image.height << "x" << r.image.width << ") in " << std::fixed
          << std::setprecision(4) << r.seconds << " s\n";
      return kExitOk;
    });
  }
  if (evl->parsed()) {
    return guarded(err, [&] {
      if (ev_vf.has_value() != ev_nu.has_value()) throw ConfigError("--vf and --nu go together");
      auto cfg = resolve(eval_c);
      if (ev_threshold) {
        cfg.eval.mode = eval::ThresholdMode::Binary;
        cfg.eval.threshold = *ev_threshold;
        cfg.validate();
      }
      EvalOptions o;
      o.checkpoint = ev_ckpt;
      o.manifest = ev_manifest;
      o.ids = ev_ids;
      o.ground_truth = ev_truth;
      o.seed = cfg.seed;
      if (ev_vf) o.pairs.emplace_back(*ev_vf, *ev_nu);
      evaluate_from_config(cfg, o, out);
      return kExitOk;
    });
  }
  if (ins->parsed()) {
    return guarded(err, [&] {
      describe_checkpoint(ins_path, out);
      return kExitOk;
    });
  }
  return kExitUsage;
}

}  // namespace gogan::cli
