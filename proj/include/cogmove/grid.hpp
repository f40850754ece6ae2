#pragma once

#include <functional>
#include <vector>

#include "cogmove/common.hpp"

namespace cogmove {

// ZeroFlux zeroes the total (diffusive + advective) flux at the habitat edge
// and conserves the population. Neumann zeroes only the normal derivative of
// the solution; the two coincide only when the potential's normal derivative
// vanishes as well. Dirichlet is the hostile boundary u = 0.
enum class BcKind { ZeroFlux, Neumann, Dirichlet, Periodic, Robin };

struct BoundaryCondition {
  BcKind kind = BcKind::ZeroFlux;
  // Robin: alpha * du/dn + beta * u = 0 on the boundary. With alpha = d and
  // beta = -da/dn the condition reduces to ZeroFlux.
  double robin_alpha = 1.0;
  double robin_beta = 0.0;

  static BoundaryCondition zero_flux() { return {BcKind::ZeroFlux, 1.0, 0.0}; }
  static BoundaryCondition neumann() { return {BcKind::Neumann, 1.0, 0.0}; }
  static BoundaryCondition dirichlet() { return {BcKind::Dirichlet, 1.0, 0.0}; }
  static BoundaryCondition periodic() { return {BcKind::Periodic, 1.0, 0.0}; }
  static BoundaryCondition robin(double alpha, double beta) {
    return {BcKind::Robin, alpha, beta};
  }

  bool operator==(const BoundaryCondition&) const = default;
};

const char* bc_name(BcKind kind);

// Cell-centered 1-D mesh on [0, L]. Centers sit at x_i = (i + 1/2) dx; fluxes
// live on the n_cells + 1 faces.
struct Grid {
  double length = 1.0;
  int n_cells = 0;
  double dx = 0.0;
  BoundaryCondition bc;

  double center(int i) const { return (i + 0.5) * dx; }
  double face(int i) const { return i * dx; }
  std::vector<double> centers() const;
  bool periodic() const { return bc.kind == BcKind::Periodic; }

  bool operator==(const Grid&) const = default;
};

Grid build_grid(double length, int n_cells, BoundaryCondition bc);

// Per-cell scalar samples of a density or potential on a Grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  double& operator[](std::size_t i) { return values[i]; }
  const double& operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

Field make_field(const Grid& grid, double fill = 0.0);
Field sample_centers(const Grid& grid, const std::function<double(double)>& f);

// Midpoint quadrature of the field over the domain: dx * sum(values).
double total_mass(const Field& f);

// One-sided difference (f_i - f_{i-1}) / dx on each of the n_cells + 1 faces.
// Boundary faces use the ghost construction implied by the grid's boundary
// condition: Periodic wraps, ZeroFlux/Neumann zero the gradient, Dirichlet
// mirrors through u = 0, Robin uses the mixed-condition ghost value.
std::vector<double> face_gradient(const Field& f);

// Face gradient of an advective potential: boundary conditions constrain the
// solution, not the potential, so walls take the one-sided second-order
// slope instead of a ghost value. Periodic grids wrap as usual.
std::vector<double> potential_face_gradient(const Field& f);

}  // namespace cogmove
