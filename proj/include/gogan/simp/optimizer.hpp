#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "gogan/simp/fea.hpp"

namespace gogan::simp {

/// Linear density filter with cone weights max(0, rmin - distance) between
/// element centers, each row normalized to sum to one.
class DensityFilter {
 public:
  DensityFilter(const Domain2D& domain, double rmin);

  /// x_filtered = H x / Hs.
  std::vector<double> apply(const std::vector<double>& x) const;
  /// Transpose of apply: H^T (v / Hs). Used to chain sensitivities.
  std::vector<double> apply_adjoint(const std::vector<double>& v) const;

  /// Normalized weight of element `col` in the average for element `row`.
  double weight(std::size_t row, std::size_t col) const;
  double rmin() const { return rmin_; }

 private:
  struct Entry {
    std::size_t col;
    double w;
  };
  Domain2D domain_;
  double rmin_;
  std::vector<std::vector<Entry>> rows_;  // raw weights H
  std::vector<double> row_sums_;          // Hs
};

class BisectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OcOptions {
  double move = 0.2;
  double eta = 0.5;
  int max_bisections = 200;
  double volume_tolerance = 1e-4;
};

/// Maps design variables to the field whose mean must hit the volume target.
using PhysicalMap = std::function<std::vector<double>(const std::vector<double>&)>;

/// Optimality-criteria update x_e * (-dc_e / (lambda dv_e))^eta with move
/// limits, clamped to [0,1]; lambda is bisected so that mean(map(x_new)) = vstar.
/// Throws BisectionError if the volume target is still missed after
/// max_bisections halvings.
std::vector<double> oc_update(const std::vector<double>& x, const std::vector<double>& dc,
                              const std::vector<double>& dv, double vstar, const OcOptions& options = {},
                              const PhysicalMap& physical = {});

struct OptimizeOptions {
  double vstar = 0.5;
  double rmin = 2.4;
  int max_iters = 200;
  double tol = 0.01;
  OcOptions oc;
  SolverOptions solver;
};

struct OptimizeResult {
  DensityField xphys;  // filtered (physical) densities
  DensityField x;      // design variables
  std::vector<double> compliance_history;  // compliance of xphys entering each iteration
  std::vector<double> change_history;
  double final_compliance = 0.0;  // compliance_of(xphys)
  int iterations = 0;
  bool converged = false;
};

/// Density-filtered SIMP compliance minimization with optimality criteria,
/// starting from the uniform field x = vstar.
OptimizeResult optimize(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                        const OptimizeOptions& options);

}  // namespace gogan::simp
