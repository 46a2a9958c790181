#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gogan/io/image.hpp"
#include "gogan/simp/optimizer.hpp"

namespace gogan::eval {

enum class ThresholdMode { Continuous, Binary };

/// Grayscale in [0,1] to element densities: area-resampled to nely x nelx,
/// then either clipped (continuous) or thresholded at `threshold` (binary).
simp::DensityField grayscale_to_xphys(const io::Grayscale& image, int nelx, int nely,
                                      ThresholdMode mode = ThresholdMode::Continuous, double threshold = 0.5);

/// Same, starting from a [-1,1] network image; values outside [-1,1] throw std::domain_error.
simp::DensityField signed_to_xphys(const std::vector<double>& values, int height, int width, int nelx, int nely,
                                   ThresholdMode mode = ThresholdMode::Continuous, double threshold = 0.5);

struct VolumeError {
  double v_gan = 0.0;           // mean density (volume fraction)
  double v_gan_absolute = 0.0;  // v_gan times the element count
  double v_err = 0.0;           // (vstar - v_gan) / vstar * 100
  double abs_v_err = 0.0;
};

/// Throws std::invalid_argument unless 0 < vstar <= 1.
VolumeError v_err(const simp::DensityField& xphys, double vstar);

struct ComplianceError {
  double c_act = 0.0;
  double c_gan = 0.0;
  double c_err = 0.0;  // (c_act - c_gan) / c_gan * 100
  double abs_c_err = 0.0;
};

/// Throws std::invalid_argument unless c_act > 0.
ComplianceError c_err(const simp::Domain2D& domain, const simp::MaterialParams& material,
                      const simp::BoundaryConditions& bcs, const simp::DensityField& xphys, double c_act);

/// Percent arithmetic on its own, for callers that already hold the compliances.
double c_err_percent(double c_act, double c_gan);
double v_err_percent(double vstar, double v_gan);

struct EvalRecord {
  std::string id;
  double vf = 0.0;
  double nu = 0.0;
  double v_gan = 0.0;
  double v_err = 0.0;
  double c_act = 0.0;
  double c_gan = 0.0;
  double c_err = 0.0;
};

struct GroundTruth {
  simp::DensityField xphys;
  double c_act = 0.0;
  double volume = 0.0;
};

/// Cantilever problem shared by the dataset generator and the evaluator.
struct CantileverSetup {
  simp::Domain2D domain{64, 32};
  simp::MaterialParams material;  // nu is overridden per condition
  simp::OptimizeOptions optimize;  // vstar is overridden per condition
  double load = 1.0;

  simp::MaterialParams material_for(double nu) const;
};

/// Memoized SIMP ground truths keyed on (vf, nu).
class OracleCache {
 public:
  explicit OracleCache(CantileverSetup setup) : setup_(std::move(setup)) {}

  void insert(double vf, double nu, GroundTruth truth);
  bool contains(double vf, double nu) const { return cache_.count({vf, nu}) != 0; }
  /// Runs the optimizer on a miss.
  const GroundTruth& get(double vf, double nu);
  const CantileverSetup& setup() const { return setup_; }

 private:
  CantileverSetup setup_;
  std::map<std::pair<double, double>, GroundTruth> cache_;
};

struct EvalCondition {
  std::string id;
  double vf = 0.0;
  double nu = 0.0;
};

/// Produces a [0,1] grayscale design for (vf, nu).
using DesignFn = std::function<io::Grayscale(const EvalCondition&)>;

struct EvaluateOptions {
  ThresholdMode mode = ThresholdMode::Continuous;
  double threshold = 0.5;
  // When non-empty, metrics.csv and one ground-truth | generated panel per record go here.
  std::string output_dir;
  bool inverted_palette = false;
};

std::vector<EvalRecord> evaluate(const DesignFn& design, const std::vector<EvalCondition>& conditions,
                                 OracleCache& oracle, const EvaluateOptions& options = {});

/// Columns vf,nu,v_gan,v_err_pct,c_act,c_gan,c_err_pct (plus a leading id).
void write_metrics_csv(const std::string& path, const std::vector<EvalRecord>& records);

}  // namespace gogan::eval
