#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gogan::simp {

/// Rectangular grid of unit-square elements. Nodes are numbered column by
/// column from the top-left corner: node(ix, iy) = ix * (nely + 1) + iy with iy
/// increasing downwards; node n owns dofs 2n (x) and 2n + 1 (y).
struct Domain2D {
  int nelx = 0;
  int nely = 0;

  std::size_t elements() const { return static_cast<std::size_t>(nelx) * nely; }
  std::size_t nodes() const { return static_cast<std::size_t>(nelx + 1) * (nely + 1); }
  std::size_t dofs() const { return 2 * nodes(); }
  std::size_t node(int ix, int iy) const { return static_cast<std::size_t>(ix) * (nely + 1) + iy; }
  /// Element (ix, iy) lives at ix * nely + iy (columns swept along x).
  std::size_t element(int ix, int iy) const { return static_cast<std::size_t>(ix) * nely + iy; }

  void validate() const;
};

struct MaterialParams {
  double e0 = 1.0;
  double emin = 1e-9;
  double nu = 0.3;
  double penal = 3.0;

  void validate() const;
  /// SIMP interpolation Emin + rho^p (E0 - Emin).
  double modulus(double rho) const;
  double modulus_derivative(double rho) const;
};

struct PointLoad {
  std::size_t dof;
  double magnitude;
};

struct BoundaryConditions {
  std::vector<std::size_t> fixed_dofs;  // sorted, unique
  std::vector<PointLoad> loads;

  void validate(const Domain2D& domain) const;
};

/// Element densities, indexed with Domain2D::element.
struct DensityField {
  int nelx = 0;
  int nely = 0;
  std::vector<double> rho;

  static DensityField uniform(const Domain2D& domain, double value);
  double& at(int ix, int iy) { return rho[static_cast<std::size_t>(ix) * nely + iy]; }
  double at(int ix, int iy) const { return rho[static_cast<std::size_t>(ix) * nely + iy]; }
  double mean() const;
  /// Throws std::invalid_argument if sizes disagree with `domain` or any value is outside [0,1].
  void validate(const Domain2D& domain) const;
};

struct FeaSolution {
  std::vector<double> u;
  double compliance = 0.0;
  // u_e^T KE u_e per element, before the modulus scaling.
  std::vector<double> element_energy;
  // max |K u - F| / max |F| over the free dofs.
  double relative_residual = 0.0;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major 8x8 stiffness of a unit-square, unit-thickness, unit-modulus
/// bilinear quad in plane stress. Dof order: lower-left, lower-right,
/// upper-right, upper-left node, (x, y) per node.
using ElementMatrix = std::array<double, 64>;

ElementMatrix element_stiffness(double nu);

/// Global dof indices of element (ix, iy) in ElementMatrix order.
std::array<std::size_t, 8> element_dofs(const Domain2D& domain, int ix, int iy);

/// Left edge clamped, unit-scaled downward point load at the bottom-right node.
BoundaryConditions cantilever_bcs(const Domain2D& domain, double load_magnitude = 1.0);

struct SolverOptions {
  // Reduced systems larger than this use diagonal-preconditioned CG.
  std::size_t direct_limit = 200000;
  double cg_tolerance = 1e-10;
};

FeaSolution solve_equilibrium(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                              const DensityField& rho, const SolverOptions& options = {});

double compliance_of(const Domain2D& domain, const MaterialParams& material, const BoundaryConditions& bcs,
                     const DensityField& xphys, const SolverOptions& options = {});

/// dC/drho_e = -dE/drho(rho_e) * u_e^T KE u_e.
std::vector<double> compliance_sensitivities(const MaterialParams& material, const DensityField& xphys,
                                             const FeaSolution& solution);

}  // namespace gogan::simp
