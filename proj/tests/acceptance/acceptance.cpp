// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gogan/cli/commands.hpp"
#include "gogan/codec/condition_codec.hpp"
#include "gogan/eval/metrics.hpp"
#include "gogan/net/losses.hpp"
#include "gogan/net/networks.hpp"
#include "gogan/simp/optimizer.hpp"
#include "gogan/train/checkpoint.hpp"
#include "gogan/train/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace gogan;
namespace fs = std::filesystem;
using gogan::testing::gradcheck;
using gogan::testing::random_tensor;
using gogan::testing::worst;
using Td = ad::Tensor<double>;

namespace {

// Collects failed checks with a short reason; a criterion passes when none failed.
struct Report {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("gogan_accept_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- criterion 1

void simp_oracle(Report& r) {
  const simp::Domain2D d{4, 3};
  simp::MaterialParams m;
  const auto bcs = simp::cantilever_bcs(d);
  auto rho = simp::DensityField::uniform(d, 0.5);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.3, 0.9);
  for (auto& v : rho.rho) v = u(rng);

  const auto sol = simp::solve_equilibrium(d, m, bcs, rho);
  const auto dc = simp::compliance_sensitivities(m, rho, sol);
  const double h = 1e-6;
  double diff2 = 0, ref2 = 0, worst_elem = 0;
  for (std::size_t e = 0; e < rho.rho.size(); ++e) {
    auto up = rho, dn = rho;
    up.rho[e] += h;
    dn.rho[e] -= h;
    const double fd = (simp::compliance_of(d, m, bcs, up) - simp::compliance_of(d, m, bcs, dn)) / (2 * h);
    diff2 += (fd - dc[e]) * (fd - dc[e]);
    ref2 += fd * fd;
    worst_elem = std::max(worst_elem, std::abs(fd - dc[e]) / std::abs(fd));
  }
  const double sens_err = std::sqrt(diff2 / ref2);
  r.check(sens_err < 1e-5, "sensitivity FD error " + fmt(sens_err));
  r.check(sol.relative_residual < 1e-8, "residual " + fmt(sol.relative_residual));

  const auto ke = simp::element_stiffness(0.3);
  const auto ref = gogan::testing::gauss_quad_stiffness(0.3);
  double ke_err = 0;
  for (int i = 0; i < 64; ++i) ke_err = std::max(ke_err, std::abs(ke[i] - ref[i]));
  r.check(ke_err < 1e-10, "KE vs Gauss " + fmt(ke_err));

  const double c = simp::compliance_of(d, m, bcs, rho);
  const double c_dense = gogan::testing::dense_cantilever_compliance(4, 3, rho.rho, 0.3, m.penal, m.emin);
  r.check(std::abs(c - c_dense) < 1e-10 * c_dense, "compliance vs dense assembly");

  r.note("sens rel err " + fmt(sens_err) + " (worst element " + fmt(worst_elem) + "), residual " +
         fmt(sol.relative_residual) + ", KE err " + fmt(ke_err));
}

// ---------------------------------------------------------------- criterion 2

void simp_behavior(Report& r) {
  const simp::Domain2D d{60, 20};
  simp::MaterialParams m;
  m.nu = 0.3;
  simp::OptimizeOptions o;
  o.vstar = 0.5;
  o.rmin = 2.4;
  o.max_iters = 200;
  const auto bcs = simp::cantilever_bcs(d);
  const auto a = simp::optimize(d, m, bcs, o);
  const auto b = simp::optimize(d, m, bcs, o);
  const double c0 = simp::compliance_of(d, m, bcs, simp::DensityField::uniform(d, 0.5));
  r.check(a.converged, "not converged within 200 iterations");
  r.check(a.iterations <= 200, "iterations " + std::to_string(a.iterations));
  r.check(std::abs(a.xphys.mean() - 0.5) <= 1e-4, "volume " + fmt(a.xphys.mean(), 8));
  r.check(a.final_compliance < c0, "compliance not below uniform field");
  r.check(a.xphys.rho == b.xphys.rho && a.compliance_history == b.compliance_history, "runs differ");
  r.note(std::to_string(a.iterations) + " iterations, volume " + fmt(a.xphys.mean(), 8) + ", C " +
         fmt(a.final_compliance, 5) + " vs uniform " + fmt(c0, 5));
}

// ---------------------------------------------------------------- criterion 3

struct PrimitiveCase {
  std::string name;
  std::function<Td()> loss;
  std::vector<gogan::testing::Leaf> leaves;
};

// Weighted sum so each output element sees a different upstream gradient.
Td weigh(const Td& y, std::uint64_t seed) {
  ad::Rng rng(seed);
  return ad::sum(ad::mul(y, random_tensor(y.shape(), rng, -1, 1, 0, false)));
}

void autodiff_integrity(Report& r) {
  ad::Rng rng(31);
  auto x4 = random_tensor({2, 3, 6, 5}, rng);
  auto k4 = random_tensor({4, 3, 3, 3}, rng);
  auto kt = random_tensor({3, 2, 4, 4}, rng);
  auto g3 = random_tensor({3}, rng, 0.5, 1.5);
  auto b3 = random_tensor({3}, rng);
  auto gap = random_tensor({2, 3, 4, 4}, rng, -2, 2, 0.05);
  auto pos = random_tensor({3, 4}, rng, 0.2, 2.0);
  auto m1 = random_tensor({3, 4}, rng);
  auto m2 = random_tensor({3, 4}, rng);
  auto dx = random_tensor({3, 5}, rng);
  auto dw = random_tensor({5, 2}, rng);
  auto db = random_tensor({2}, rng);
  auto ca = random_tensor({2, 2, 3, 3}, rng);
  auto cb = random_tensor({2, 1, 3, 3}, rng);
  auto cl = random_tensor({20}, rng, -1, 1, 0.0);
  for (auto& v : cl.mutable_data())
    if (std::abs(std::abs(v) - 0.5) < 0.05) v += 0.1;  // keep clear of the clamp edges

  std::vector<PrimitiveCase> cases{
      {"conv2d", [&] { return weigh(ad::conv2d(x4, k4, {2, 1}), 1); }, {{"x", x4}, {"k", k4}}},
      {"conv_transpose2d", [&] { return weigh(ad::conv_transpose2d(x4, kt, {2, 1}), 2); }, {{"x", x4}, {"k", kt}}},
      {"batchnorm2d",
       [&] {
         ad::RunningStats<double> rs{{0, 0, 0}, {1, 1, 1}};
         return weigh(ad::batchnorm2d(x4, g3, b3, true, rs), 3);
       },
       {{"x", x4}, {"gamma", g3}, {"beta", b3}}},
      {"batchnorm2d (inference)",
       [&] {
         ad::RunningStats<double> rs{{0.1, -0.2, 0.3}, {1.5, 0.7, 1.1}};
         return weigh(ad::batchnorm2d(x4, g3, b3, false, rs), 4);
       },
       {{"x", x4}, {"gamma", g3}, {"beta", b3}}},
      {"instance_norm2d", [&] { return weigh(ad::instance_norm2d(x4, g3, b3), 5); },
       {{"x", x4}, {"gamma", g3}, {"beta", b3}}},
      {"add_channel_bias", [&] { return weigh(ad::add_channel_bias(x4, b3), 6); }, {{"x", x4}, {"b", b3}}},
      {"leaky_relu", [&] { return weigh(ad::leaky_relu(gap, 0.2), 7); }, {{"x", gap}}},
      {"relu", [&] { return weigh(ad::relu(gap), 8); }, {{"x", gap}}},
      {"sigmoid", [&] { return weigh(ad::sigmoid(gap), 9); }, {{"x", gap}}},
      {"tanh", [&] { return weigh(ad::tanh(gap), 10); }, {{"x", gap}}},
      {"dense", [&] { return weigh(ad::dense(dx, dw, db), 11); }, {{"x", dx}, {"w", dw}, {"b", db}}},
      {"add", [&] { return weigh(ad::add(m1, m2), 12); }, {{"a", m1}, {"b", m2}}},
      {"sub", [&] { return weigh(ad::sub(m1, m2), 13); }, {{"a", m1}, {"b", m2}}},
      {"mul", [&] { return weigh(ad::mul(m1, m2), 14); }, {{"a", m1}, {"b", m2}}},
      {"affine", [&] { return weigh(ad::affine(m1, -1.7, 0.3), 15); }, {{"x", m1}}},
      {"sum", [&] { return ad::sum(ad::mul(m1, m1)); }, {{"x", m1}}},
      {"mean", [&] { return ad::mean(ad::mul(m1, m2)); }, {{"a", m1}, {"b", m2}}},
      {"abs", [&] { return weigh(ad::abs(gap), 16); }, {{"x", gap}}},
      {"log", [&] { return weigh(ad::log(pos), 17); }, {{"x", pos}}},
      {"clamp", [&] { return weigh(ad::clamp(cl, -0.5, 0.5), 18); }, {{"x", cl}}},
      {"dropout",
       [&] {
         ad::Rng fixed(19);
         return weigh(ad::dropout(m1, 0.5, true, fixed), 19);
       },
       {{"x", m1}}},
      {"concat_channels", [&] { return weigh(ad::concat_channels(ca, cb), 20); }, {{"a", ca}, {"b", cb}}},
      {"reshape", [&] { return weigh(ad::reshape(m1, {2, 6}), 21); }, {{"x", m1}}},
  };

  double worst_primitive = 0;
  std::string worst_name;
  for (auto& c : cases) {
    const double e = worst(gradcheck(c.loss, c.leaves));
    r.check(e < 1e-4, c.name + " rel err " + fmt(e));
    if (e >= worst_primitive) {
      worst_primitive = e;
      worst_name = c.name;
    }
  }

  // Composite: U-Net + PatchGAN at R=16, generator and discriminator losses.
  net::GeneratorConfig gc;
  gc.resolution = 16;
  gc.in_channels = 2;
  gc.base_filters = 4;
  gc.filter_cap = 8;
  gc.dense_widths = {8};
  net::DiscriminatorConfig dc;
  dc.resolution = 16;
  dc.condition_channels = 2;
  dc.base_filters = 4;
  dc.filter_cap = 8;
  dc.stride2_blocks = 2;
  net::Generator<double> g(gc);
  net::Discriminator<double> d(dc);
  ad::Rng init(32);
  g.initialize(init);
  d.initialize(init);
  // Wider init than the training default so every layer carries signal of order one.
  for (auto& p : g.parameters())
    if (p.name.find("weight") != std::string::npos)
      for (auto& v : p.tensor.mutable_data()) v *= 10.0;
  for (auto& p : d.parameters())
    if (p.name.find("weight") != std::string::npos)
      for (auto& v : p.tensor.mutable_data()) v *= 10.0;
  const auto cond = random_tensor({2, 2, 16, 16}, init, -1, 1, 0, false);
  const auto target = random_tensor({2, 1, 16, 16}, init, -1, 1, 0, false);

  std::vector<gogan::testing::Leaf> g_leaves, d_leaves;
  for (auto& p : g.parameters()) g_leaves.push_back({"generator/" + p.name, p.tensor});
  for (auto& p : d.parameters()) d_leaves.push_back({"discriminator/" + p.name, p.tensor});

  auto g_loss = [&] {
    ad::Rng drop(33);
    auto fake = g.forward(cond, true, drop);
    return net::generator_loss(d.forward(cond, fake, true), fake, target, 100.0).total;
  };
  auto d_loss = [&] {
    ad::Rng drop(33);
    Td fake;
    {
      ad::NoGradScope<double> off;
      fake = g.forward(cond, true, drop);
    }
    return net::discriminator_loss(d.forward(cond, target, true), d.forward(cond, fake, true));
  };
  const auto gr = gradcheck(g_loss, g_leaves, 1e-5, 16);
  const auto dr = gradcheck(d_loss, d_leaves, 1e-5, 16);
  double worst_composite = 0;
  std::string worst_param;
  for (const auto* set : {&gr, &dr})
    for (const auto& e : *set) {
      r.check(e.rel_error < 1e-4, e.name + " rel err " + fmt(e.rel_error));
      r.check(e.norm > 0, e.name + " has zero gradient");
      if (e.rel_error >= worst_composite) {
        worst_composite = e.rel_error;
        worst_param = e.name;
      }
    }
  r.note(std::to_string(cases.size()) + " primitives, worst " + worst_name + " " + fmt(worst_primitive) + "; " +
         std::to_string(gr.size() + dr.size()) + " composite tensors, worst " + worst_param + " " +
         fmt(worst_composite));
}

// ---------------------------------------------------------------- criterion 4

void loss_identities(Report& r) {
  const auto dl = net::discriminator_loss(Td::full({2, 1, 30, 30}, 0.5), Td::full({2, 1, 30, 30}, 0.5));
  r.check(std::abs(dl.item() - 2 * std::log(2.0)) <= 1e-9, "D loss at 0.5 = " + fmt(dl.item(), 12));

  ad::Rng rng(41);
  const auto d_fake = random_tensor({2, 1, 6, 6}, rng, 0.05, 0.95, 0, false);
  const auto gen = random_tensor({2, 1, 8, 8}, rng, -1, 1, 0, false);
  const auto tgt = random_tensor({2, 1, 8, 8}, rng, -1, 1, 0, false);
  double worst = 0;
  for (double lambda : {0.0, 1.0, 100.0, 1e4})
    for (auto form : {net::AdversarialForm::NonSaturating, net::AdversarialForm::Minimax}) {
      const auto gl = net::generator_loss(d_fake, gen, tgt, lambda, form);
      const double recomposed = gl.adversarial.item() + lambda * gl.l1.item();
      worst = std::max(worst, std::abs(gl.total.item() - recomposed));
      r.check(std::abs(gl.total.item() - recomposed) <= 1e-12 * std::max(1.0, std::abs(recomposed)),
"total != adversarial + lambda*L1 at lambda " + fmt(lambda));
    }
  // Independent L1 and adversarial values.
  double l1 = 0, adv = 0;
  for (std::size_t i = 0; i < gen.numel(); ++i) l1 += std::abs(tgt[i] - gen[i]);
  l1 /= static_cast<double>(gen.numel());
  for (std::size_t i = 0; i < d_fake.numel(); ++i) adv -= std::log(d_fake[i]);
  adv /= static_cast<double>(d_fake.numel());
  const auto gl = net::generator_loss(d_fake, gen, tgt);
  r.check(std::abs(gl.l1.item() - l1) < 1e-12, "L1 term");
  r.check(std::abs(gl.adversarial.item() - adv) < 1e-12, "adversarial term");

  r.check(net::kDefaultL1Weight == 100.0, "library default lambda");
  r.check(train::TrainConfig{}.lambda == 100.0, "trainer default lambda");
  r.check(cli::parse_config("{}").train.lambda == 100.0, "config default lambda");
  const auto at_chance = net::generator_loss(Td::full({1}, 0.5), Td::full({4}, 0.49), Td::full({4}, 0.5));
  r.check(std::abs(at_chance.total.item() - (std::log(2.0) + 1.0)) < 1e-10, "ln2 + 1 example");
  r.note("D(0.5) = " + fmt(dl.item(), 12) + ", max recomposition gap " + fmt(worst) + ", default lambda 100");
}

// ---------------------------------------------------------------- criterion 5

std::vector<train::TrainSample> toy_samples(int n, int R) {
  const codec::ConditionSpec vf{"vf", 0.0, 1.0}, nu{"nu", 0.2, 0.5};
  std::vector<train::TrainSample> out;
  for (int i = 0; i < n; ++i) {
    const double v = 0.2 + 0.6 * i / std::max(1, n - 1), p = 0.2 + 0.3 * ((5 * i) % n) / std::max(1, n - 1);
    train::TrainSample s;
    s.id = "t" + std::to_string(i);
    s.channels = 2;
    s.resolution = R;
    s.conditions = codec::encode_conditions({{vf, v}, {nu, p}}, R, R).planes<double>();
    s.target.assign(static_cast<std::size_t>(R) * R, 1.0);
    for (int row = 0; row < R; ++row)
      for (int col = 0; col < static_cast<int>(v * R); ++col)
        if (std::abs(row - R / 2) < p * R) s.target[row * R + col] = -1.0;
    s.values = {v, p};
    out.push_back(std::move(s));
  }
  return out;
}

struct ToyRig {
  net::Generator<double> g;
  net::Discriminator<double> d;
  train::Trainer<double> t;
  static net::GeneratorConfig gcfg() {
    net::GeneratorConfig c;
    c.resolution = 32;
    c.in_channels = 2;
    c.base_filters = 8;
    c.filter_cap = 16;
    c.dense_widths = {16};
    return c;
  }
  static net::DiscriminatorConfig dcfg() {
    net::DiscriminatorConfig c;
    c.resolution = 32;
    c.condition_channels = 2;
    c.base_filters = 8;
    c.filter_cap = 16;
    c.stride2_blocks = 2;
    return c;
  }
  explicit ToyRig(train::TrainConfig cfg) : g(gcfg()), d(dcfg()), t(g, d, std::move(cfg)) {}

  std::vector<double> snapshot() const {
    std::vector<double> v;
    for (const auto& p : g.parameters()) v.insert(v.end(), p.tensor.values().begin(), p.tensor.values().end());
    for (const auto& p : d.parameters()) v.insert(v.end(), p.tensor.values().begin(), p.tensor.values().end());
    for (const auto* bufs : {&g.buffers(), &d.buffers()})
      for (const auto& [k, b] : *bufs) {
        v.insert(v.end(), b.mean.begin(), b.mean.end());
        v.insert(v.end(), b.var.begin(), b.var.end());
      }
    return v;
  }
};

void algorithm_conformance(Report& r) {
  const auto data = toy_samples(8, 32);

  // k = 1: one D update per G update, checked step by step.
  {
    train::TrainConfig cfg;
    cfg.seed = 51;
    cfg.epochs = 4;
    ToyRig rig(cfg);
    bool per_step = true;
    std::int64_t last_d = 0, last_g = 0;
    std::vector<int> sizes;
    const auto curve = rig.t.train(data, {});
    for (const auto& m : curve) sizes.push_back(m.batch_size);
    // Re-run step by step to observe the counters after every generator update.
    ToyRig step_rig(cfg);
    for (std::size_t i = 0; i < 6; ++i) {
      step_rig.t.train_step({&data[i % 8], &data[(i + 1) % 8]});
      const auto& s = step_rig.t.state();
      per_step = per_step && s.d_updates - last_d == 1 && s.g_updates - last_g == 1;
      last_d = s.d_updates;
      last_g = s.g_updates;
    }
    r.check(per_step, "counters did not advance 1:1 per step");
    r.check(rig.t.state().d_updates == rig.t.state().g_updates, "d_updates != g_updates");

    // Default schedule over 4 epochs: batch 1, 2, 4, 8 on consecutive epochs.
    std::vector<int> expect;
    for (int b : {1, 2, 4, 8})
      for (int i = 0; i < 8 / b; ++i) expect.push_back(b);
    r.check(sizes == expect, "batch sizes do not follow {1,2,4,8}");
    const auto sched = train::default_schedule(100);
    r.check(train::batch_size_at(sched, 0) == 1 && train::batch_size_at(sched, 25) == 2 &&
                train::batch_size_at(sched, 50) == 4 && train::batch_size_at(sched, 75) == 8,
            "default schedule boundaries");
    r.note(std::to_string(rig.t.state().g_updates) + " G / " + std::to_string(rig.t.state().d_updates) +
           " D updates, batch sizes 8x1 4x2 2x4 1x8");
  }

  // Resume over 50 steps: 25 + checkpoint + 25 against 50 straight.
  {
    const auto dir = scratch("resume");
    train::TrainConfig cfg;
    cfg.seed = 52;
    cfg.epochs = 40;
    cfg.batch_schedule = {{0, 3}};
    cfg.max_steps = 50;
    ToyRig full(cfg);
    full.t.train(data);

    auto half = cfg;
    half.max_steps = 25;
    ToyRig first(half);
    first.t.train(data);
    const auto path = (dir / "ck.gog").string();
    train::save_checkpoint(path, first.t, "acceptance");

    ToyRig second(cfg);
    train::load_checkpoint(path, second.t, train::fnv1a64("acceptance"));
    second.t.train(data);
    const bool same = full.snapshot() == second.snapshot();
    const bool counters = full.t.state().global_step == 50 && second.t.state().global_step == 50 &&
                          full.t.state().d_updates == second.t.state().d_updates;
    const bool rng_same = ad::serialize_rng(full.t.state().rng) == ad::serialize_rng(second.t.state().rng);
    r.check(same, "resumed parameters differ from uninterrupted run");
    r.check(counters, "step counters differ");
    r.check(rng_same, "RNG state differs");
    r.note("resume at step 25 (mid-epoch cursor " + std::to_string(first.t.state().cursor) +
           ") bitwise equal after 50 steps: " + (same ? "yes" : "no"));
    fs::remove_all(dir);
  }
}

// ---------------------------------------------------------------- criterion 6

const char* kDeskConfig = R"({
  "precision": "float32",
  "seed": 7,
  "resolution": 64,
  "domain": {"nelx": 64, "nely": 32},
  "simp": {"max_iters": 400},
  "dataset": {"pairs": [[0.25, 0.4], [0.35, 0.5], [0.4, 0.3], [0.45, 0.3],
                        [0.55, 0.4], [0.3, 0.2], [0.5, 0.25], [0.3, 0.45]]},
  "generator": {"base_filters": 64, "filter_cap": 128, "dense_widths": [128]},
  "discriminator": {"base_filters": 64, "filter_cap": 128},
  "train": {"epochs": 160}
})";

void desk_end_to_end(Report& r) {
  const auto dir = scratch("desk");
  {
    std::ofstream(dir / "desk.json") << kDeskConfig;
  }
  const auto cfg = cli::load_config((dir / "desk.json").string());
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  const auto gen = cli::generate_dataset(cfg, {}, log);
  const double t_gen = seconds_since(t0);
  r.check(gen.records.size() == 8, std::to_string(gen.records.size()) + " ground truths generated");

  const auto t1 = std::chrono::steady_clock::now();
  const auto trained = cli::train_from_config(cfg, false, log);
  const double t_train = seconds_since(t1);
  const auto steps = trained.curve.size();
  r.check(steps <= 2000, std::to_string(steps) + " steps");
  const auto [head, tail] = train::l1_head_tail(trained.curve, 10);
  const double drop = 1.0 - tail / head;
  r.check(drop >= 0.5, "L1 drop " + fmt(100 * drop) + "%");

  cli::EvalOptions eo;
  eo.out_dir = (dir / "eval").string();
  const auto records = cli::evaluate_from_config(cfg, eo, log);
  double mean_v = 0, mean_c = 0;
  for (const auto& e : records) {
    mean_v += std::abs(e.v_err);
    mean_c += std::abs(e.c_err);
  }
  if (!records.empty()) {
    mean_v /= static_cast<double>(records.size());
    mean_c /= static_cast<double>(records.size());
  }
  r.check(records.size() == 8, std::to_string(records.size()) + " evaluated");
  r.check(mean_v < 10.0, "mean |V_err| " + fmt(mean_v) + "%");
  r.note(std::to_string(steps) + " steps, L1 " + fmt(head) + " -> " + fmt(tail) + " (" + fmt(100 * drop) +
         "% drop), mean |V_err| " + fmt(mean_v) + "%, mean |C_err| " + fmt(mean_c) + "% (generate " + fmt(t_gen) +
         " s, train " + fmt(t_train) + " s)");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- criterion 7

void metric_fidelity(Report& r) {
  const simp::Domain2D small{4, 2};
  const auto ve = eval::v_err(simp::DensityField::uniform(small, 0.45), 0.5);
  r.check(std::abs(ve.v_err - 10.0) < 1e-12, "v_err example " + fmt(ve.v_err, 15));

  const simp::Domain2D d{8, 4};
  simp::MaterialParams m;
  const auto bcs = simp::cantilever_bcs(d);
  const auto field = simp::DensityField::uniform(d, 0.6);
  const double c = simp::compliance_of(d, m, bcs, field);
  const auto ce = eval::c_err(d, m, bcs, field, c / 2);
  r.check(std::abs(ce.c_err + 50.0) < 1e-12, "c_err example " + fmt(ce.c_err, 15));

  io::Grayscale checker = io::Grayscale::filled(4, 4, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) checker.at(i, j) = (i + j) % 2;
  bool half = true;
  for (double v : eval::grayscale_to_xphys(checker, 2, 2).rho) half = half && v == 0.5;
  r.check(half, "checkerboard average");

  // Ground truth written as an 8-bit image at R=64, read back and scored against itself.
  const auto dir = scratch("selfeval");
  eval::CantileverSetup setup;
  setup.optimize.max_iters = 400;
  eval::OracleCache oracle(setup);
  double worst_v = 0, worst_c = 0;
  for (auto [vf, nu] : {std::pair{0.25, 0.4}, {0.5, 0.3}, {0.4, 0.5}}) {
    const auto& truth = oracle.get(vf, nu);
    const auto path = (dir / "gt.pgm").string();
    io::write_pgm(path, io::density_to_image(truth.xphys, 64, 64));
    const auto xphys = eval::grayscale_to_xphys(io::read_pgm(path), setup.domain.nelx, setup.domain.nely);
    const auto v = eval::v_err(xphys, vf);
    const auto cc = eval::c_err(setup.domain, setup.material_for(nu), simp::cantilever_bcs(setup.domain, setup.load),
                                xphys, truth.c_act);
    worst_v = std::max(worst_v, v.abs_v_err);
    worst_c = std::max(worst_c, cc.abs_c_err);
  }
  r.check(worst_v < 0.5, "self-eval |V_err| " + fmt(worst_v) + "%");
  r.check(worst_c < 0.5, "self-eval |C_err| " + fmt(worst_c) + "%");
  r.note("v_err(0.45 | 0.5) = " + fmt(ve.v_err, 15) + "%, c_err(2x) = " + fmt(ce.c_err, 15) +
         "%, self-eval worst |V_err| " + fmt(worst_v) + "%, |C_err| " + fmt(worst_c) + "%");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- criterion 8

void codec_properties(Report& r) {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> side(1, 64);
  double worst_ratio = 0;
  for (int i = 0; i < 1000; ++i) {
    const double lo = -5 + 10 * u(rng), width = 1e-3 + 5 * u(rng);
    const codec::ConditionSpec spec{"c" + std::to_string(i), lo, lo + width};
    const int H = side(rng), W = side(rng);
    const double value = lo + width * u(rng);
    const auto img = codec::encode_scalar(value, spec, H, W);
    const double bound = 0.5 * width / (static_cast<double>(H) * W);
    const double err = std::abs(codec::decode_image(img, spec) - value);
    worst_ratio = std::max(worst_ratio, err / bound);
    if (!(err <= bound * (1 + 1e-9) && img.is_binary() && img.is_prefix_filled())) {
      r.check(false, "round trip " + spec.name + " value " + fmt(value, 10));
      break;
    }
  }
  const codec::ConditionSpec nu{"nu", 0.2, 0.5};
  std::size_t prev = 0;
  bool monotone = true;
  for (int i = 0; i <= 256; ++i) {
    const auto n = codec::encode_scalar(nu.min + (nu.max - nu.min) * i / 256.0, nu, 16, 16).black_count();
    monotone = monotone && n >= prev;
    prev = n;
  }
  r.check(monotone, "fill count not monotone");
  r.check(prev == 256, "max value not fully black");
  r.note("1000 round trips, worst error " + fmt(worst_ratio) + " of the half-pixel bound; 257 values monotone");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string title;
    double budget_s;
    std::function<void(Report&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "SIMP oracle correctness", 5, simp_oracle},
      {2, "SIMP optimization behavior", 60, simp_behavior},
      {3, "autodiff integrity", 120, autodiff_integrity},
      {4, "loss identities", 0, loss_identities},
      {5, "training loop conformance", 0, algorithm_conformance},
      {6, "desk-scale end-to-end", 1800, desk_end_to_end},
      {7, "metric formula fidelity", 0, metric_fidelity},
      {8, "condition codec", 0, codec_properties},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(rep);
    } catch (const std::exception& e) {
      rep.check(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (c.budget_s > 0) rep.check(secs < c.budget_s, "runtime " + fmt(secs) + " s over " + fmt(c.budget_s) + " s");
    const bool ok = rep.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(), secs);
    for (const auto& n : rep.notes) std::printf("       %s\n", n.c_str());
    for (const auto& f : rep.failures) std::printf("       failed: %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
