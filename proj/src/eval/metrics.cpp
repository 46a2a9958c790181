#include "gogan/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace gogan::eval {

simp::DensityField grayscale_to_xphys(const io::Grayscale& image, int nelx, int nely, ThresholdMode mode,
                                      double threshold) {
  for (double p : image.pixels)
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("grayscale value outside [0,1]: " + std::to_string(p));
  auto field = io::image_to_density(image, nelx, nely);
  for (double& r : field.rho) {
    if (mode == ThresholdMode::Binary)
      r = r >= threshold ? 1.0 : 0.0;
    else
      r = std::clamp(r, 0.0, 1.0);
  }
  return field;
}

simp::DensityField signed_to_xphys(const std::vector<double>& values, int height, int width, int nelx, int nely,
                                   ThresholdMode mode, double threshold) {
  return grayscale_to_xphys(io::from_signed(values, height, width, 0.0), nelx, nely, mode, threshold);
}

double v_err_percent(double vstar, double v_gan) {
  if (!(vstar > 0.0 && vstar <= 1.0)) throw std::invalid_argument("v_err: target volume must lie in (0,1]");
  return (vstar - v_gan) / vstar * 100.0;
}

double c_err_percent(double c_act, double c_gan) {
  if (!(c_act > 0.0)) throw std::invalid_argument("c_err: reference compliance must be positive");
  return (c_act - c_gan) / c_gan * 100.0;
}

VolumeError v_err(const simp::DensityField& xphys, double vstar) {
  VolumeError e;
  e.v_gan = xphys.mean();
  e.v_gan_absolute = e.v_gan * static_cast<double>(xphys.rho.size());
  e.v_err = v_err_percent(vstar, e.v_gan);
  e.abs_v_err = std::abs(e.v_err);
  return e;
}

ComplianceError c_err(const simp::Domain2D& domain, const simp::MaterialParams& material,
                      const simp::BoundaryConditions& bcs, const simp::DensityField& xphys, double c_act) {
  if (!(c_act > 0.0)) throw std::invalid_argument("c_err: reference compliance must be positive");
  ComplianceError e;
  e.c_act = c_act;
  e.c_gan = simp::compliance_of(domain, material, bcs, xphys);
  e.c_err = c_err_percent(c_act, e.c_gan);
  e.abs_c_err = std::abs(e.c_err);
  return e;
}

simp::MaterialParams CantileverSetup::material_for(double nu) const {
  auto m = material;
  m.nu = nu;
  return m;
}

void OracleCache::insert(double vf, double nu, GroundTruth truth) { cache_[{vf, nu}] = std::move(truth); }

const GroundTruth& OracleCache::get(double vf, double nu) {
  auto it = cache_.find({vf, nu});
  if (it != cache_.end()) return it->second;
  const auto& d = setup_.domain;
  auto opts = setup_.optimize;
  opts.vstar = vf;
  const auto result = simp::optimize(d, setup_.material_for(nu), simp::cantilever_bcs(d, setup_.load), opts);
  GroundTruth t{result.xphys, result.final_compliance, result.xphys.mean()};
  return cache_.emplace(std::make_pair(vf, nu), std::move(t)).first->second;
}

std::vector<EvalRecord> evaluate(const DesignFn& design, const std::vector<EvalCondition>& conditions,
                                 OracleCache& oracle, const EvaluateOptions& options) {
  namespace fs = std::filesystem;
  std::vector<EvalRecord> records;
  const auto& setup = oracle.setup();
  const auto& d = setup.domain;
  const auto bcs = simp::cantilever_bcs(d, setup.load);
  if (!options.output_dir.empty()) fs::create_directories(options.output_dir);

  for (const auto& c : conditions) {
    const GroundTruth& truth = oracle.get(c.vf, c.nu);
    const io::Grayscale img = design(c);
    const auto xphys = grayscale_to_xphys(img, d.nelx, d.nely, options.mode, options.threshold);
    const auto ve = v_err(xphys, c.vf);
    const auto ce = c_err(d, setup.material_for(c.nu), bcs, xphys, truth.c_act);
    records.push_back({c.id, c.vf, c.nu, ve.v_gan, ve.v_err, ce.c_act, ce.c_gan, ce.c_err});

    if (!options.output_dir.empty()) {
      const auto truth_img = io::density_to_image(truth.xphys, img.height, img.width);
      const auto panel = io::hconcat({truth_img, img});
      const std::string stem = c.id.empty() ? "cond" + std::to_string(records.size() - 1) : c.id;
      io::write_png((fs::path(options.output_dir) / (stem + "_panel.png")).string(), panel, options.inverted_palette);
    }
  }
  if (!options.output_dir.empty())
    write_metrics_csv((fs::path(options.output_dir) / "metrics.csv").string(), records);
  return records;
}

void write_metrics_csv(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "id,vf,nu,v_gan,v_err_pct,c_act,c_gan,c_err_pct\n" << std::setprecision(10);
  for (const auto& r : records)
    out << r.id << ',' << r.vf << ',' << r.nu << ',' << r.v_gan << ',' << r.v_err << ',' << r.c_act << ',' << r.c_gan
        << ',' << r.c_err << '\n';
}

}  // namespace gogan::eval
