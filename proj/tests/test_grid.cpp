#include <doctest.h>

#include <cmath>

#include "cogmove/grid.hpp"

using namespace cogmove;

TEST_CASE("build_grid basic geometry") {
  Grid g = build_grid(1.0, 4, BoundaryCondition::periodic());
  CHECK(g.dx == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.center(0) == doctest::Approx(0.125));
  CHECK(g.center(1) == doctest::Approx(0.375));
  CHECK(g.center(2) == doctest::Approx(0.625));
  CHECK(g.center(3) == doctest::Approx(0.875));
  CHECK(g.dx * g.n_cells == doctest::Approx(g.length).epsilon(1e-15));

  Grid g2 = build_grid(pi, 128, BoundaryCondition::zero_flux());
  CHECK(g2.dx == doctest::Approx(pi / 128).epsilon(1e-15));
}

TEST_CASE("build_grid rejects bad input") {
  CHECK_THROWS_AS(build_grid(-1.0, 8, BoundaryCondition::periodic()), ConfigError);
  CHECK_THROWS_AS(build_grid(1.0, 3, BoundaryCondition::periodic()), ConfigError);
  CHECK_THROWS_AS(build_grid(0.0, 8, BoundaryCondition::periodic()), ConfigError);
}

TEST_CASE("total_mass midpoint quadrature") {
  Grid g = build_grid(2.0, 10, BoundaryCondition::zero_flux());
  Field c = make_field(g, 3.0);
  CHECK(total_mass(c) == doctest::Approx(6.0).epsilon(1e-15));

  Grid g4 = build_grid(1.0, 4, BoundaryCondition::zero_flux());
  Field f = make_field(g4);
  f.values = {1.0, 2.0, 3.0, 4.0};
  CHECK(total_mass(f) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("normalizing a field by its own quadrature gives unit mass") {
  Grid g = build_grid(3.0, 97, BoundaryCondition::zero_flux());
  Field f = sample_centers(g, [](double x) { return 1.0 + std::sin(2.0 * x) * std::sin(2.0 * x); });
  const double m = total_mass(f);
  for (auto& v : f.values) v /= m;
  CHECK(std::abs(total_mass(f) - 1.0) < 1e-12);
}

TEST_CASE("face_gradient of a constant field vanishes inside") {
  Grid g = build_grid(1.0, 16, BoundaryCondition::periodic());
  Field c = make_field(g, 7.5);
  auto grad = face_gradient(c);
  for (double v : grad) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("face_gradient of the linear field on a periodic grid") {
  Grid g = build_grid(1.0, 8, BoundaryCondition::periodic());
  Field f = sample_centers(g, [](double x) { return x; });
  auto grad = face_gradient(f);
  for (int i = 1; i < g.n_cells; ++i) CHECK(grad[i] == doctest::Approx(1.0).epsilon(1e-12));
  // wrap faces implied by the wrap
  CHECK(grad[0] == doctest::Approx((f.values[0] - f.values[7]) / g.dx));
  CHECK(grad[8] == doctest::Approx(grad[0]));
}

TEST_CASE("face_gradient is second order on smooth periodic fields") {
  // Taylor-order oracle: max error against the analytic derivative of
  // sin(2 pi x / L) at faces should drop by ~4x per halving of dx.
  const double L = 1.0;
  std::vector<int> sizes = {64, 128, 256, 512};
  std::vector<double> errs;
  for (int n : sizes) {
    Grid g = build_grid(L, n, BoundaryCondition::periodic());
    Field f = sample_centers(g, [L](double x) { return std::sin(2.0 * pi * x / L); });
    auto grad = face_gradient(f);
    double err = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double exact = (2.0 * pi / L) * std::cos(2.0 * pi * g.face(i) / L);
      err = std::max(err, std::abs(grad[i] - exact));
    }
    errs.push_back(err);
  }
  // fitted log-log slope across the resolution ladder
  double slope_sum = 0.0;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    slope_sum += std::log2(errs[i - 1] / errs[i]);
  }
  const double slope = slope_sum / static_cast<double>(errs.size() - 1);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("face_gradient is linear in the field") {
  Grid g = build_grid(2.0, 32, BoundaryCondition::zero_flux());
  Field f = sample_centers(g, [](double x) { return std::sin(3.0 * x); });
  Field h = sample_centers(g, [](double x) { return std::exp(-x); });
  const double a = 1.7, b = -0.4;
  Field combo = make_field(g);
  for (int i = 0; i < g.n_cells; ++i) combo.values[i] = a * f.values[i] + b * h.values[i];
  auto gf = face_gradient(f);
  auto gh = face_gradient(h);
  auto gc = face_gradient(combo);
  for (std::size_t i = 0; i < gc.size(); ++i) {
    CHECK(gc[i] == doctest::Approx(a * gf[i] + b * gh[i]).epsilon(1e-12));
  }
}

TEST_CASE("boundary faces honor the boundary condition") {
  Grid zf = build_grid(1.0, 8, BoundaryCondition::zero_flux());
  Field f = sample_centers(zf, [](double x) { return x * x; });
  auto g1 = face_gradient(f);
  CHECK(g1.front() == 0.0);
  CHECK(g1.back() == 0.0);

  Grid dir = build_grid(1.0, 8, BoundaryCondition::dirichlet());
  Field fd = sample_centers(dir, [](double) { return 1.0; });
  auto g2 = face_gradient(fd);
  CHECK(g2.front() == doctest::Approx(2.0 / dir.dx));
  CHECK(g2.back() == doctest::Approx(-2.0 / dir.dx));
}

TEST_CASE("Robin ghost with alpha=d, beta=0 matches the Neumann ghost") {
  Grid robin = build_grid(1.0, 8, BoundaryCondition::robin(0.7, 0.0));
  Field f = sample_centers(robin, [](double x) { return 1.0 + x; });
  auto g = face_gradient(f);
  CHECK(g.front() == doctest::Approx(0.0));
  CHECK(g.back() == doctest::Approx(0.0));
}
