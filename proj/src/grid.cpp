#include "cogmove/grid.hpp"

#include <cmath>

namespace cogmove {

const char* bc_name(BcKind kind) {
  switch (kind) {
    case BcKind::ZeroFlux: return "zero_flux";
    case BcKind::Neumann: return "neumann";
    case BcKind::Dirichlet: return "dirichlet";
    case BcKind::Periodic: return "periodic";
    case BcKind::Robin: return "robin";
  }
  return "unknown";
}

Grid build_grid(double length, int n_cells, BoundaryCondition bc) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ConfigError("grid length must be positive, got " + std::to_string(length));
  }
  if (n_cells < 4) {
    throw ConfigError("grid needs at least 4 cells, got " + std::to_string(n_cells));
  }
  if (bc.kind == BcKind::Robin && bc.robin_alpha == 0.0) {
    throw ConfigError("Robin boundary requires a nonzero derivative coefficient");
  }
  Grid g;
  g.length = length;
  g.n_cells = n_cells;
  g.dx = length / n_cells;
  g.bc = bc;
  return g;
}

std::vector<double> Grid::centers() const {
  std::vector<double> x(n_cells);
  for (int i = 0; i < n_cells; ++i) x[i] = center(i);
  return x;
}

Field make_field(const Grid& grid, double fill) {
  return Field{grid, std::vector<double>(static_cast<std::size_t>(grid.n_cells), fill)};
}

Field sample_centers(const Grid& grid, const std::function<double(double)>& f) {
  Field out = make_field(grid);
  for (int i = 0; i < grid.n_cells; ++i) out.values[i] = f(grid.center(i));
  return out;
}

double total_mass(const Field& f) {
  double sum = 0.0;
  for (double v : f.values) sum += v;
  return f.grid.dx * sum;
}

std::vector<double> face_gradient(const Field& f) {
  const Grid& g = f.grid;
  const int n = g.n_cells;
  const double inv_dx = 1.0 / g.dx;
  std::vector<double> grad(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 1; i < n; ++i) grad[i] = (f.values[i] - f.values[i - 1]) * inv_dx;

  switch (g.bc.kind) {
    case BcKind::Periodic: {
      const double wrap = (f.values[0] - f.values[n - 1]) * inv_dx;
      grad[0] = wrap;
      grad[n] = wrap;
      break;
    }
    case BcKind::ZeroFlux:
    case BcKind::Neumann:
      grad[0] = 0.0;
      grad[n] = 0.0;
      break;
    case BcKind::Dirichlet:
      // Ghost value mirrors the first cell through the boundary value 0.
      grad[0] = 2.0 * f.values[0] * inv_dx;
      grad[n] = -2.0 * f.values[n - 1] * inv_dx;
      break;
    case BcKind::Robin: {
      // alpha du/dn + beta u = 0 with the ghost centered value at the wall.
      const double a = g.bc.robin_alpha;
      const double b = g.bc.robin_beta;
      const double ratio = (2.0 * a - b * g.dx) / (2.0 * a + b * g.dx);
      grad[0] = (f.values[0] - f.values[0] * ratio) * inv_dx;
      grad[n] = (f.values[n - 1] * ratio - f.values[n - 1]) * inv_dx;
      break;
    }
  }
  return grad;
}

std::vector<double> potential_face_gradient(const Field& f) {
  const Grid& g = f.grid;
  const int n = g.n_cells;
  const double inv_dx = 1.0 / g.dx;
  std::vector<double> grad(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 1; i < n; ++i) grad[i] = (f.values[i] - f.values[i - 1]) * inv_dx;
  if (g.periodic()) {
    const double wrap = (f.values[0] - f.values[n - 1]) * inv_dx;
    grad[0] = wrap;
    grad[n] = wrap;
  } else {
    grad[0] = (-2.0 * f.values[0] + 3.0 * f.values[1] - f.values[2]) * inv_dx;
    grad[n] = (2.0 * f.values[n - 1] - 3.0 * f.values[n - 2] + f.values[n - 3]) * inv_dx;
  }
  return grad;
}

}  // namespace cogmove
