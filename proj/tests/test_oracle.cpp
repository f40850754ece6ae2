#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cogmove/oracle.hpp"

using namespace cogmove;

namespace {

Grid lattice(double L = 10.0, int n = 400) {
  return build_grid(L, n, BoundaryCondition::zero_flux());
}

double total(const std::vector<double>& p) {
  return std::accumulate(p.begin(), p.end(), 0.0);
}

double mean_position(const std::vector<double>& p, const Grid& g) {
  double m = 0.0;
  for (int i = 0; i < g.n_cells; ++i) m += p[i] * g.center(i);
  return m;
}

}  // namespace

TEST_CASE("lattice kernel: unit sum, symmetry, vanishing first moment") {
  Grid g = lattice();
  LatticeKernel k = build_lattice_kernel(0.2, 0.01, g.dx);
  CHECK(total(k.weights) == doctest::Approx(1.0).epsilon(1e-14));
  for (int j = 1; j <= k.half_width; ++j) {
    CHECK(k.weights[k.half_width + j] == k.weights[k.half_width - j]);
  }
  CHECK(k.moment(1) > 0.0);
  // signed first moment vanishes exactly when summed in symmetric pairs
  double signed_m1 = 0.0;
  for (int j = 1; j <= k.half_width; ++j) {
    signed_m1 += j * g.dx * k.weights[k.half_width + j] -
                 j * g.dx * k.weights[k.half_width - j];
  }
  CHECK(signed_m1 == 0.0);
  // M2 tracks sigma^2 for a well-resolved kernel
  CHECK(k.moment(2) == doctest::Approx(0.2 * 0.2).epsilon(1e-3));
}

TEST_CASE("master step conserves probability exactly") {
  Grid g = lattice();
  LatticeKernel k = build_lattice_kernel(0.15, 0.01, g.dx);
  std::vector<double> w = build_weight_field(g, {parse_expression("sin(x)+2*x")}, {0.4});
  std::vector<double> p(g.n_cells, 0.0);
  p[g.n_cells / 3] = 0.6;
  p[g.n_cells / 2] = 0.4;
  for (int s = 0; s < 50; ++s) {
    p = master_step(p, k, w);
    CHECK(std::abs(total(p) - 1.0) < 1e-14);
  }
}

TEST_CASE("flat weights reduce the master step to pure diffusion") {
  Grid g = lattice();
  LatticeKernel k = build_lattice_kernel(0.2, 0.01, g.dx);
  std::vector<double> w(g.n_cells, 3.7);  // constant weight cancels
  std::vector<double> p(g.n_cells, 0.0);
  const int mid = g.n_cells / 2;
  p[mid] = 1.0;
  const double x_start = mean_position(p, g);
  std::vector<double> q = master_step(p, k, w);
  // the mean stays put under a symmetric kernel
  CHECK(mean_position(q, g) == doctest::Approx(x_start).epsilon(1e-12));
  // and the redistribution equals the kernel itself
  for (int j = -k.half_width; j <= k.half_width; ++j) {
    CHECK(q[mid + j] == doctest::Approx(k.weights[j + k.half_width]).epsilon(1e-12));
  }
}

TEST_CASE("rightward weighting pushes the point mass right") {
  Grid g = lattice();
  LatticeKernel k = build_lattice_kernel(0.2, 0.01, g.dx);
  std::vector<double> w = build_weight_field(g, {parse_expression("x")}, {0.8});
  std::vector<double> p(g.n_cells, 0.0);
  p[g.n_cells / 2] = 1.0;
  const double x_start = mean_position(p, g);
  std::vector<double> q = master_step(p, k, w);
  CHECK(mean_position(q, g) > x_start);
}

TEST_CASE("drift and diffusion estimates against the closed moments") {
  Grid g = lattice();
  const double sigma = 0.25, tau = 0.02;
  LatticeKernel k = build_lattice_kernel(sigma, tau, g.dx);

  // beta = 0: no drift, diffusion M2 / (2 tau) exactly
  std::vector<double> flat(g.n_cells, 1.0);
  DriftDiffusion dd = estimate_drift_diffusion(k, flat, g.n_cells / 2);
  CHECK(dd.drift == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(dd.diffusion == doctest::Approx(k.moment(2) / (2.0 * tau)).epsilon(1e-3));

  // linear covariate: c_hat ~ 2 d_hat beta within 2%
  const double beta = 0.3;
  std::vector<double> w = build_weight_field(g, {parse_expression("x")}, {beta});
  DriftDiffusion tilted = estimate_drift_diffusion(k, w, g.n_cells / 2);
  CHECK(tilted.drift == doctest::Approx(2.0 * tilted.diffusion * beta).epsilon(0.02));

  CHECK_THROWS_AS(estimate_drift_diffusion(k, w, 1), ConfigError);
}

TEST_CASE("drift formula for linear, quadratic and mixed covariates") {
  Grid g = build_grid(10.0, 500, BoundaryCondition::zero_flux());
  auto report_for = [&](std::vector<Expression> a, std::vector<double> beta) {
    return verify_fokker_planck(a, beta, 0.12, 0.01, g, false);
  };

  auto linear = report_for({parse_expression("x")}, {0.3});
  CHECK(linear.max_relative_deviation < 0.02);

  auto quadratic = report_for({parse_expression("(x-5)^2/2")}, {0.25});
  CHECK(quadratic.max_relative_deviation < 0.02);

  auto mixed = report_for({parse_expression("x"), parse_expression("(x-5)^2/2")}, {0.2, 0.15});
  CHECK(mixed.max_relative_deviation < 0.02);

  // both diffusion conventions are reported
  CHECK(linear.diffusion_1d == doctest::Approx(2.0 * linear.diffusion_2d_convention));
}

TEST_CASE("drift deviation shrinks as sigma halves") {
  // fixed sample points keep the comparison window independent of the
  // stencil width, isolating the limit structure in sigma
  Grid g = build_grid(15.0, 1500, BoundaryCondition::zero_flux());
  const double beta = 0.3;
  Expression a = parse_expression("(x-7.5)^2/2");
  std::vector<double> w = build_weight_field(g, {a}, {beta});
  std::vector<double> devs;
  for (double sigma : {0.4, 0.2, 0.1}) {
    LatticeKernel k = build_lattice_kernel(sigma, 0.01, g.dx);
    double dev = 0.0;
    for (double x : {9.0, 9.7, 10.4, 11.1}) {
      const int idx = static_cast<int>(x / g.dx);
      DriftDiffusion dd = estimate_drift_diffusion(k, w, idx);
      const double target = beta * (g.center(idx) - 7.5);
      dev = std::max(dev, std::abs(dd.drift / (2.0 * dd.diffusion) - target) / std::abs(target));
    }
    devs.push_back(dev);
  }
  CHECK(devs[1] < devs[0]);
  CHECK(devs[2] < devs[1]);
  // fitted order at least one
  const double order = std::log2(devs[0] / devs[2]) / 2.0;
  CHECK(order >= 1.0);
}

TEST_CASE("skew decays faster than the diffusion rate") {
  Grid g = build_grid(10.0, 1000, BoundaryCondition::zero_flux());
  const double beta = 0.3;
  std::vector<double> ratio;
  for (double sigma : {0.4, 0.2, 0.1}) {
    LatticeKernel k = build_lattice_kernel(sigma, 0.01, g.dx);
    std::vector<double> w = build_weight_field(g, {parse_expression("x")}, {beta});
    DriftDiffusion dd = estimate_drift_diffusion(k, w, g.n_cells / 2);
    ratio.push_back(std::abs(dd.skew_rate) / (2.0 * dd.diffusion));
  }
  CHECK(ratio[1] < 0.5 * ratio[0]);
  CHECK(ratio[2] < 0.5 * ratio[1]);
}

TEST_CASE("master equation matches the diffusion equation at beta = 0") {
  Grid g = build_grid(20.0, 800, BoundaryCondition::zero_flux());
  auto rep = verify_fokker_planck({parse_expression("x")}, {0.0}, 0.1, 0.02, g, true, 1.0);
  CHECK(rep.pde_compared);
  CHECK(rep.l1_distance < 1e-2);
}
