#include "gogan/simp/fea.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace gogan::simp {

void Domain2D::validate() const {
  if (nelx < 1 || nely < 1) {
    throw std::invalid_argument("domain: nelx and nely must be >= 1, got " + std::to_string(nelx) + "x" +
                                std::to_string(nely));
  }
}

void MaterialParams::validate() const {
  if (!(e0 > 0.0)) throw std::invalid_argument("material: E0 must be positive");
  // Emin = 0 is accepted for analysis of fully positive fields; void elements then make K singular.
  if (!(emin >= 0.0 && emin < e0)) throw std::invalid_argument("material: Emin must lie in [0, E0)");
  if (!(nu > 0.0 && nu <= 0.5)) throw std::invalid_argument("material: Poisson ratio must lie in (0, 0.5], got " + std::to_string(nu));
  if (!(penal >= 1.0)) throw std::invalid_argument("material: penalization exponent must be >= 1");
}

double MaterialParams::modulus(double rho) const { return emin + std::pow(rho, penal) * (e0 - emin); }

double MaterialParams::modulus_derivative(double rho) const {
  return penal * std::pow(rho, penal - 1.0) * (e0 - emin);
}

void BoundaryConditions::validate(const Domain2D& domain) const {
  if (fixed_dofs.size() < 3) throw std::invalid_argument("boundary conditions: at least 3 fixed dofs are required");
  for (auto d : fixed_dofs)
    if (d >= domain.dofs()) throw std::invalid_argument("boundary conditions: fixed dof " + std::to_string(d) + " out of range");
  if (!std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()) ||
      std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) != fixed_dofs.end())
    throw std::invalid_argument("boundary conditions: fixed dofs must be sorted and unique");
  for (const auto& l : loads) {
    if (l.dof >= domain.dofs()) throw std::invalid_argument("boundary conditions: load dof " + std::to_string(l.dof) + " out of range");
    if (std::binary_search(fixed_dofs.begin(), fixed_dofs.end(), l.dof))
      throw std::invalid_argument("boundary conditions: dof " + std::to_string(l.dof) + " is both fixed and loaded");
  }
}

DensityField DensityField::uniform(const Domain2D& domain, double value) {
  return DensityField{domain.nelx, domain.nely, std::vector<double>(domain.elements(), value)};
}

double DensityField::mean() const {
  if (rho.empty()) return 0.0;
  return std::accumulate(rho.begin(), rho.end(), 0.0) / static_cast<double>(rho.size());
}

void DensityField::validate(const Domain2D& domain) const {
  if (nelx != domain.nelx || nely != domain.nely || rho.size() != domain.elements()) {
    throw std::invalid_argument("density field: size " + std::to_string(nelx) + "x" + std::to_string(nely) +
                                " does not match domain " + std::to_string(domain.nelx) + "x" +
                                std::to_string(domain.nely));
  }
  for (std::size_t e = 0; e < rho.size(); ++e)
    if (!(rho[e] >= 0.0 && rho[e] <= 1.0))
      throw std::invalid_argument("density field: element " + std::to_string(e) + " = " + std::to_string(rho[e]) +
                                  " outside [0,1]");
}

ElementMatrix element_stiffness(double nu) {
  if (!(nu > 0.0 && nu <= 0.5)) throw std::invalid_argument("element_stiffness: nu must lie in (0, 0.5]");
  const double k[8] = {0.5 - nu / 6.0,        0.125 + nu / 8.0, -0.25 - nu / 12.0, -0.125 + 3.0 * nu / 8.0,
                       -0.25 + nu / 12.0,     -0.125 - nu / 8.0, nu / 6.0,          0.125 - 3.0 * nu / 8.0};
  // Index pattern of the closed-form matrix (entries of k, 0-based).
  static constexpr int pattern[8][8] = {
      {0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1}, {3, 6, 5, 0, 7, 2, 1, 4},
      {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6}, {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  const double scale = 1.0 / (1.0 - nu * nu);
  ElementMatrix ke{};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) ke[i * 8 + j] = scale * k[pattern[i][j]];
  return ke;
}

std::array<std::size_t, 8> element_dofs(const Domain2D& domain, int ix, int iy) {
  const std::size_t tl = domain.node(ix, iy);
  const std::size_t bl = tl + 1;
  const std::size_t tr = domain.node(ix + 1, iy);
  const std::size_t br = tr + 1;
  return {2 * bl, 2 * bl + 1, 2 * br, 2 * br + 1, 2 * tr, 2 * tr + 1, 2 * tl, 2 * tl + 1};
}

BoundaryConditions cantilever_bcs(const Domain2D& domain, double load_magnitude) {
  domain.validate();
  BoundaryConditions bcs;
  for (int iy = 0; iy <= domain.nely; ++iy) {
    const auto n = domain.node(0, iy);
    bcs.fixed_dofs.push_back(2 * n);
    bcs.fixed_dofs.push_back(2 * n + 1);
  }
  const auto corner = domain.node(domain.nelx, domain.nely);
  bcs.loads.push_back({2 * corner + 1, -load_magnitude});
  return bcs;
}

FeaSolution solve_equilibrium(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                              const DensityField& rho, const SolverOptions& options) {
  domain.validate();
  material.validate();
  bcs.validate(domain);
  rho.validate(domain);

  const std::size_t ndof = domain.dofs();
  std::vector<std::ptrdiff_t> free_index(ndof, 0);
  for (auto d : bcs.fixed_dofs) free_index[d] = -1;
  std::size_t nfree = 0;
  for (auto& f : free_index)
    if (f == 0) f = static_cast<std::ptrdiff_t>(nfree++);

  const ElementMatrix ke = element_stiffness(material.nu);
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  triplets.reserve(domain.elements() * 64);
  for (int ix = 0; ix < domain.nelx; ++ix)
    for (int iy = 0; iy < domain.nely; ++iy) {
      const double e = material.modulus(rho.rho[domain.element(ix, iy)]);
      const auto dofs = element_dofs(domain, ix, iy);
      for (int i = 0; i < 8; ++i) {
        const auto fi = free_index[dofs[i]];
        if (fi < 0) continue;
        for (int j = 0; j < 8; ++j) {
          const auto fj = free_index[dofs[j]];
          if (fj < 0) continue;
          triplets.emplace_back(fi, fj, e * ke[i * 8 + j]);
        }
      }
    }
  Eigen::SparseMatrix<double> k(static_cast<Eigen::Index>(nfree), static_cast<Eigen::Index>(nfree));
  k.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nfree));
  for (const auto& l : bcs.loads) f[free_index[l.dof]] += l.magnitude;

  Eigen::VectorXd uf;
  if (nfree <= options.direct_limit) {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(k);
    if (llt.info() != Eigen::Success) {
      throw SingularSystemError("solve_equilibrium: reduced stiffness is not positive definite; "
                                "the boundary conditions do not remove all rigid-body modes");
    }
    uf = llt.solve(f);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options.cg_tolerance);
    cg.setMaxIterations(static_cast<Eigen::Index>(10 * nfree));
    cg.compute(k);
    uf = cg.solve(f);
    if (cg.info() != Eigen::Success) {
      throw SingularSystemError("solve_equilibrium: conjugate gradient did not converge; "
                                "check that the boundary conditions remove all rigid-body modes");
    }
  }

  FeaSolution sol;
  const double fmax = f.cwiseAbs().maxCoeff();
  sol.relative_residual = fmax > 0.0 ? (k * uf - f).cwiseAbs().maxCoeff() / fmax : 0.0;

  sol.u.assign(ndof, 0.0);
  for (std::size_t d = 0; d < ndof; ++d)
    if (free_index[d] >= 0) sol.u[d] = uf[free_index[d]];

  sol.element_energy.assign(domain.elements(), 0.0);
  double c = 0.0;
  for (int ix = 0; ix < domain.nelx; ++ix)
    for (int iy = 0; iy < domain.nely; ++iy) {
      const auto dofs = element_dofs(domain, ix, iy);
      double energy = 0.0;
      for (int i = 0; i < 8; ++i) {
        double row = 0.0;
        for (int j = 0; j < 8; ++j) row += ke[i * 8 + j] * sol.u[dofs[j]];
        energy += sol.u[dofs[i]] * row;
      }
      const auto e = domain.element(ix, iy);
      sol.element_energy[e] = energy;
      c += material.modulus(rho.rho[e]) * energy;
    }
  sol.compliance = c;
  return sol;
}

double compliance_of(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                     const DensityField& xphys, const SolverOptions& options) {
  return solve_equilibrium(domain, material, bcs, xphys, options).compliance;
}

std::vector<double> compliance_sensitivities(const MaterialParams& material, const DensityField& xphys,
                                             const FeaSolution& solution) {
  std::vector<double> dc(xphys.rho.size());
  for (std::size_t e = 0; e < dc.size(); ++e)
    dc[e] = -material.modulus_derivative(xphys.rho[e]) * solution.element_energy[e];
  return dc;
}

}  // namespace gogan::simp
