#include "gogan/simp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gogan::simp {

DensityFilter::DensityFilter(const Domain2D& domain, double rmin) : domain_(domain), rmin_(rmin) {
  domain.validate();
  if (!(rmin >= 1.0)) throw std::invalid_argument("density filter: rmin must be >= 1, got " + std::to_string(rmin));
  const int reach = static_cast<int>(std::ceil(rmin)) - 1;
  rows_.resize(domain.elements());
  row_sums_.assign(domain.elements(), 0.0);
  for (int i1 = 0; i1 < domain.nelx; ++i1)
    for (int j1 = 0; j1 < domain.nely; ++j1) {
      const auto e1 = domain.element(i1, j1);
      for (int i2 = std::max(i1 - reach, 0); i2 <= std::min(i1 + reach, domain.nelx - 1); ++i2)
        for (int j2 = std::max(j1 - reach, 0); j2 <= std::min(j1 + reach, domain.nely - 1); ++j2) {
          const double dist = std::hypot(static_cast<double>(i1 - i2), static_cast<double>(j1 - j2));
          const double w = std::max(0.0, rmin - dist);
          if (w <= 0.0) continue;
          rows_[e1].push_back({domain.element(i2, j2), w});
          row_sums_[e1] += w;
        }
    }
}

std::vector<double> DensityFilter::apply(const std::vector<double>& x) const {
  if (x.size() != rows_.size()) throw std::invalid_argument("density filter: field size mismatch");
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double s = 0.0;
    for (const auto& e : rows_[r]) s += e.w * x[e.col];
    out[r] = s / row_sums_[r];
  }
  return out;
}

std::vector<double> DensityFilter::apply_adjoint(const std::vector<double>& v) const {
  if (v.size() != rows_.size()) throw std::invalid_argument("density filter: field size mismatch");
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const double scaled = v[r] / row_sums_[r];
    for (const auto& e : rows_[r]) out[e.col] += e.w * scaled;
  }
  return out;
}

double DensityFilter::weight(std::size_t row, std::size_t col) const {
  for (const auto& e : rows_.at(row))
    if (e.col == col) return e.w / row_sums_[row];
  return 0.0;
}

std::vector<double> oc_update(const std::vector<double>& x, const std::vector<double>& dc,
                              const std::vector<double>& dv, double vstar, const OcOptions& options,
                              const PhysicalMap& physical) {
  const std::size_t n = x.size();
  if (dc.size() != n || dv.size() != n) throw std::invalid_argument("oc_update: size mismatch");
  if (!(vstar > 0.0 && vstar <= 1.0)) throw std::invalid_argument("oc_update: vstar must lie in (0, 1]");

  std::vector<double> xnew(n);
  auto volume = [&](const std::vector<double>& trial) {
    const auto& field = physical ? physical(trial) : trial;
    return std::accumulate(field.begin(), field.end(), 0.0) / static_cast<double>(n);
  };
  auto candidate = [&](double lambda) {
    for (std::size_t e = 0; e < n; ++e) {
      // Sensitivities are nonpositive by the SIMP model; round-off can push tiny ones above zero.
      const double ratio = std::max(0.0, -dc[e]) / (dv[e] * lambda);
      const double target = x[e] * std::pow(ratio, options.eta);
      xnew[e] = std::clamp(target, std::max(0.0, x[e] - options.move), std::min(1.0, x[e] + options.move));
    }
  };

  double l1 = 0.0, l2 = 1e9;
  double vol = 0.0;
  for (int it = 0; it < options.max_bisections; ++it) {
    const double lmid = 0.5 * (l1 + l2);
    candidate(lmid);
    vol = volume(xnew);
    if (std::abs(vol - vstar) < 1e-12) break;
    if (vol > vstar)
      l1 = lmid;
    else
      l2 = lmid;
    if ((l2 - l1) / (l1 + l2) < 1e-12) break;
  }
  if (std::abs(vol - vstar) > options.volume_tolerance) {
    throw BisectionError("oc_update: volume " + std::to_string(vol) + " misses target " + std::to_string(vstar) +
                         " after bisection (move limits may make the target unreachable)");
  }
  return xnew;
}

OptimizeResult optimize(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                        const OptimizeOptions& options) {
  if (!(options.vstar > 0.0 && options.vstar <= 1.0))
    throw std::invalid_argument("optimize: vstar must lie in (0, 1], got " + std::to_string(options.vstar));
  if (options.max_iters < 1) throw std::invalid_argument("optimize: max_iters must be >= 1");

  const DensityFilter filter(domain, options.rmin);
  const std::vector<double> ones(domain.elements(), 1.0);
  const std::vector<double> dv = filter.apply_adjoint(ones);
  const PhysicalMap to_physical = [&filter](const std::vector<double>& v) { return filter.apply(v); };

  OptimizeResult result;
  result.x = DensityField::uniform(domain, options.vstar);
  result.xphys = result.x;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    const FeaSolution sol = solve_equilibrium(domain, material, bcs, result.xphys, options.solver);
    result.compliance_history.push_back(sol.compliance);
    const auto dc = filter.apply_adjoint(compliance_sensitivities(material, result.xphys, sol));

    auto xnew = oc_update(result.x.rho, dc, dv, options.vstar, options.oc, to_physical);
    double change = 0.0;
    for (std::size_t e = 0; e < xnew.size(); ++e) change = std::max(change, std::abs(xnew[e] - result.x.rho[e]));
    result.change_history.push_back(change);
    result.x.rho = std::move(xnew);
    result.xphys.rho = filter.apply(result.x.rho);
    // Filtering a field in [0,1] stays in [0,1] up to round-off.
    for (auto& v : result.xphys.rho) v = std::clamp(v, 0.0, 1.0);
    result.iterations = iter;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.final_compliance = compliance_of(domain, material, bcs, result.xphys, options.solver);
  return result;
}

}  // namespace gogan::simp
