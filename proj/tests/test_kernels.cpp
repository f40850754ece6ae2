#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cogmove/kernels.hpp"

using namespace cogmove;

namespace {

// Composite Simpson quadrature, the independent oracle for kernel masses and
// Fourier symbols.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return sum * h / 3.0;
}

// Integrates kernel_density(x) * f(x) with the integration range split at the
// kernel's non-smooth points (top-hat edges, exponential kink at 0).
double quadrature_against(const KernelSpec& spec, const std::function<double(double)>& f) {
  auto integrand = [&](double x) { return kernel_density(spec, x) * f(x); };
  if (spec.shape == KernelShape::TopHat) {
    return simpson(integrand, -spec.radius, spec.radius, 20000);
  }
  const double span = spec.shape == KernelShape::Exponential ? 60.0 * spec.radius
                                                             : 12.0 * spec.radius;
  return simpson(integrand, -span, 0.0, 100000) + simpson(integrand, 0.0, span, 100000);
}

double quadrature_symbol(const KernelSpec& spec, double k) {
  return quadrature_against(spec, [k](double x) { return std::cos(k * x); });
}

}  // namespace

TEST_CASE("kernel density closed forms") {
  CHECK(kernel_density(KernelSpec::top_hat(0.5), 0.0) == doctest::Approx(1.0));
  CHECK(kernel_density(KernelSpec::top_hat(0.5), 0.6) == doctest::Approx(0.0));
  CHECK(kernel_density(KernelSpec::exponential(1.0), 2.0) ==
        doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-14));
  CHECK(0.5 * std::exp(-2.0) == doctest::Approx(0.0676676416183064).epsilon(1e-12));
  CHECK_THROWS_AS(kernel_density(KernelSpec::delta(), 0.0), ConfigError);
}

TEST_CASE("kernel axioms: symmetry, unit mass, monotone non-increase") {
  for (KernelShape shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    for (double R : {0.05, 0.2, 1.0}) {
      KernelSpec spec{shape, R, KernelBoundaryMode::CutOff};
      // symmetry on a sampled |x| grid
      for (int i = 0; i <= 40; ++i) {
        const double x = (i / 40.0) * 3.0 * R;
        CHECK(kernel_density(spec, x) == doctest::Approx(kernel_density(spec, -x)));
      }
      // unit mass by quadrature over effectively the whole line
      const double mass = quadrature_against(spec, [](double) { return 1.0; });
      CHECK(std::abs(mass - 1.0) < 1e-10);
      // non-increasing from the origin
      double prev = kernel_density(spec, 0.0);
      for (int i = 1; i <= 60; ++i) {
        const double x = (i / 60.0) * 4.0 * R;
        const double cur = kernel_density(spec, x);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
      }
    }
  }
}

TEST_CASE("kernel_weights: top-hat support inside one cell") {
  Grid g = build_grid(1.0, 16, BoundaryCondition::periodic());
  auto w = kernel_weights(KernelSpec::top_hat(g.dx / 2.0), g);
  double center = w[(w.size() - 1) / 2];
  CHECK(center == doctest::Approx(1.0).epsilon(1e-14));
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("kernel_weights: exact top-hat cell masses") {
  // Exact integration of 1/(2R) over the cell intervals:
  //   R = 1.5 dx covers three cells with mass dx/(2R) = 1/3 each;
  //   R = 0.75 dx splits as {1/6, 2/3, 1/6}.
  Grid g = build_grid(1.0, 16, BoundaryCondition::periodic());
  {
    auto w = kernel_weights(KernelSpec::top_hat(1.5 * g.dx), g);
    const std::size_t m = (w.size() - 1) / 2;
    CHECK(w[m] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(w[m - 1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(w[m + 1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  {
    auto w = kernel_weights(KernelSpec::top_hat(0.75 * g.dx), g);
    const std::size_t m = (w.size() - 1) / 2;
    CHECK(w[m] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(w[m - 1] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(w[m + 1] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  }
}

TEST_CASE("kernel_weights agree with quadrature of the density per cell") {
  Grid g = build_grid(2.0, 32, BoundaryCondition::zero_flux());
  for (KernelShape shape : {KernelShape::Gaussian, KernelShape::Exponential}) {
    KernelSpec spec{shape, 0.13, KernelBoundaryMode::CutOff};
    auto w = kernel_weights(spec, g);
    const int m = static_cast<int>((w.size() - 1) / 2);
    for (int j = -3; j <= 3; ++j) {
      const double expected = simpson([&](double x) { return kernel_density(spec, x); },
                                      (j - 0.5) * g.dx, (j + 0.5) * g.dx, 2000);
      CHECK(w[static_cast<std::size_t>(j + m)] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("gaussian weights sum to one") {
  Grid g = build_grid(1.0, 64, BoundaryCondition::periodic());
  auto w = kernel_weights(KernelSpec::gaussian(0.2), g);
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("kernel_weights rejects R >= L") {
  Grid g = build_grid(1.0, 16, BoundaryCondition::periodic());
  CHECK_THROWS_AS(kernel_weights(KernelSpec::top_hat(1.0), g), ConfigError);
}

TEST_CASE("perceive: constant field is preserved on periodic grids") {
  Grid g = build_grid(1.0, 48, BoundaryCondition::periodic());
  Field c = make_field(g, 2.75);
  for (auto shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    Field out = perceive(c, KernelSpec{shape, 0.2, KernelBoundaryMode::CutOff});
    for (double v : out.values) CHECK(v == doctest::Approx(2.75).epsilon(1e-12));
  }
}

TEST_CASE("perceive: delta kernel is the identity") {
  Grid g = build_grid(1.0, 32, BoundaryCondition::zero_flux());
  Field f = sample_centers(g, [](double x) { return std::sin(5.0 * x) + 2.0; });
  Field out = perceive(f, KernelSpec::delta());
  for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(out.values[i] == f.values[i]);
}

TEST_CASE("perceive: cut-off loses half the mass at the wall") {
  // constant 1 on [0,1] with a top-hat of R = 0.25: the cell nearest x = 0
  // sees mass (x0 + R)/(2R) = 1/2 + dx/(4R); the limit toward the wall is 1/2
  Grid g = build_grid(1.0, 64, BoundaryCondition::zero_flux());
  KernelSpec spec = KernelSpec::top_hat(0.25);
  Field ones = make_field(g, 1.0);
  Field out = perceive(ones, spec);
  const double expected = 0.5 + g.dx / (4.0 * 0.25);
  CHECK(out.values[0] == doctest::Approx(expected).epsilon(1e-12));

  Grid fine = build_grid(1.0, 512, BoundaryCondition::zero_flux());
  Field out_fine = perceive(make_field(fine, 1.0), spec);
  CHECK(std::abs(out_fine.values[0] - 0.5) < std::abs(out.values[0] - 0.5));
  CHECK(out_fine.values[0] == doctest::Approx(0.5 + fine.dx / (4.0 * 0.25)).epsilon(1e-12));

  // renormalized mode restores the constant
  spec.boundary_mode = KernelBoundaryMode::CutOffRenormalized;
  Field renorm = perceive(ones, spec);
  for (double v : renorm.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perceive converges at O(R^2) on smooth periodic fields") {
  const double L = 1.0;
  Grid g = build_grid(L, 1024, BoundaryCondition::periodic());
  Field a = sample_centers(g, [L](double x) { return std::sin(2.0 * pi * x / L); });
  for (auto shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    std::vector<double> errs;
    for (double R : {0.04, 0.02, 0.01, 0.005}) {
      Field out = perceive(a, KernelSpec{shape, R, KernelBoundaryMode::CutOff});
      double err = 0.0;
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        err = std::max(err, std::abs(out.values[i] - a.values[i]));
      }
      errs.push_back(err);
    }
    double slope_sum = 0.0;
    for (std::size_t i = 1; i < errs.size(); ++i) slope_sum += std::log2(errs[i - 1] / errs[i]);
    const double slope = slope_sum / static_cast<double>(errs.size() - 1);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("transform path equals direct summation on random fields") {
  Grid g = build_grid(1.0, 256, BoundaryCondition::periodic());
  std::mt19937 rng(1234u);
  Field a = make_field(g);
  for (auto& v : a.values) v = static_cast<double>(rng() % 10000) / 10000.0;
  for (auto shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    KernelSpec spec{shape, 0.17, KernelBoundaryMode::CutOff};
    Field fast = perceive(a, spec);
    Field direct = perceive_direct(a, spec);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      CHECK(std::abs(fast.values[i] - direct.values[i]) < 1e-12);
    }
  }
}

TEST_CASE("perception preserves evenness about the domain midpoint") {
  for (auto bc : {BoundaryCondition::zero_flux(), BoundaryCondition::periodic()}) {
    Grid g = build_grid(2.0, 128, bc);
    Field a = sample_centers(g, [](double x) { return std::exp(-8.0 * (x - 1.0) * (x - 1.0)); });
    Field out = perceive(a, KernelSpec::gaussian(0.15));
    const int n = g.n_cells;
    for (int i = 0; i < n / 2; ++i) {
      CHECK(std::abs(out.values[i] - out.values[n - 1 - i]) < 1e-12);
    }
  }
}

TEST_CASE("fourier symbol closed forms against quadrature") {
  for (auto shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    KernelSpec spec{shape, 0.3, KernelBoundaryMode::CutOff};
    CHECK(fourier_symbol(spec, 0.0) == doctest::Approx(1.0));
    for (double k : {0.5, 2.0, 7.0}) {
      CHECK(fourier_symbol(spec, k) == doctest::Approx(quadrature_symbol(spec, k)).epsilon(1e-7));
    }
  }
  // quadrature-checked anchor points
  CHECK(fourier_symbol(KernelSpec::top_hat(1.0), pi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(quadrature_symbol(KernelSpec::top_hat(1.0), pi)) < 1e-8);
  CHECK(fourier_symbol(KernelSpec::gaussian(1.0), 1.0) ==
        doctest::Approx(0.6065306597126334).epsilon(1e-12));
  CHECK(quadrature_symbol(KernelSpec::gaussian(1.0), 1.0) ==
        doctest::Approx(0.6065306597126334).epsilon(1e-8));
  CHECK(fourier_symbol(KernelSpec::delta(), 3.0) == 1.0);
}

TEST_CASE("symbol magnitude never exceeds one") {
  for (auto shape : {KernelShape::TopHat, KernelShape::Gaussian, KernelShape::Exponential}) {
    for (double R : {0.05, 0.2, 1.0}) {
      for (int i = 0; i <= 200; ++i) {
        const double k = i * 0.25;
        CHECK(std::abs(fourier_symbol(KernelSpec{shape, R, KernelBoundaryMode::CutOff}, k)) <=
              1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(validate_kernel(KernelSpec{KernelShape::Gaussian, 0.0, KernelBoundaryMode::CutOff}),
                  ConfigError);
  CHECK_THROWS_AS(validate_kernel(KernelSpec{KernelShape::Delta, 0.5, KernelBoundaryMode::CutOff}),
                  ConfigError);
  CHECK_NOTHROW(validate_kernel(KernelSpec::delta()));
}
