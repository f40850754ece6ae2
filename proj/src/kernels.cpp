#include "cogmove/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace cogmove {

namespace {

// Iterative radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& v : a) v /= static_cast<double>(n);
  }
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Folds the symmetric stencil into a length-n circular kernel.
std::vector<double> fold_circular(const std::vector<double>& weights, int n) {
  const int m = static_cast<int>(weights.size() - 1) / 2;
  std::vector<double> circ(static_cast<std::size_t>(n), 0.0);
  for (int j = -m; j <= m; ++j) {
    int idx = ((j % n) + n) % n;
    circ[static_cast<std::size_t>(idx)] += weights[static_cast<std::size_t>(j + m)];
  }
  return circ;
}

Field perceive_periodic_direct(const Field& a, const std::vector<double>& weights) {
  const int n = a.grid.n_cells;
  const std::vector<double> circ = fold_circular(weights, n);
  Field out = make_field(a.grid);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      int src = i - k;
      src = ((src % n) + n) % n;
      sum += circ[static_cast<std::size_t>(k)] * a.values[static_cast<std::size_t>(src)];
    }
    out.values[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

Field perceive_periodic_fft(const Field& a, const std::vector<double>& weights) {
  const std::size_t n = static_cast<std::size_t>(a.grid.n_cells);
  const std::vector<double> circ = fold_circular(weights, a.grid.n_cells);
  std::vector<std::complex<double>> fa(n), fc(n);
  for (std::size_t i = 0; i < n; ++i) {
    fa[i] = a.values[i];
    fc[i] = circ[i];
  }
  fft_radix2(fa, false);
  fft_radix2(fc, false);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fc[i];
  fft_radix2(fa, true);
  Field out = make_field(a.grid);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = fa[i].real();
  return out;
}

Field perceive_bounded(const Field& a, const KernelSpec& spec,
                       const std::vector<double>& weights) {
  const int n = a.grid.n_cells;
  const int m = static_cast<int>(weights.size() - 1) / 2;
  Field out = make_field(a.grid);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    double wsum = 0.0;
    const int j_lo = std::max(-m, -i);
    const int j_hi = std::min(m, n - 1 - i);
    for (int j = j_lo; j <= j_hi; ++j) {
      const double w = weights[static_cast<std::size_t>(j + m)];
      sum += w * a.values[static_cast<std::size_t>(i + j)];
      wsum += w;
    }
    if (spec.boundary_mode == KernelBoundaryMode::CutOffRenormalized && wsum > 0.0) {
      sum /= wsum;
    }
    out.values[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

}  // namespace

const char* kernel_shape_name(KernelShape shape) {
  switch (shape) {
    case KernelShape::TopHat: return "top_hat";
    case KernelShape::Gaussian: return "gaussian";
    case KernelShape::Exponential: return "exponential";
    case KernelShape::Delta: return "delta";
  }
  return "unknown";
}

KernelShape kernel_shape_from_name(const std::string& name) {
  if (name == "top_hat" || name == "tophat") return KernelShape::TopHat;
  if (name == "gaussian") return KernelShape::Gaussian;
  if (name == "exponential") return KernelShape::Exponential;
  if (name == "delta") return KernelShape::Delta;
  throw ConfigError("unknown kernel shape '" + name +
                    "' (expected top_hat, gaussian, exponential or delta)");
}

void validate_kernel(const KernelSpec& spec) {
  if (spec.shape == KernelShape::Delta) {
    if (spec.radius != 0.0) {
      throw ConfigError("delta kernel requires R = 0");
    }
    return;
  }
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius)) {
    throw ConfigError("kernel radius must be positive (R = 0 only with the delta shape)");
  }
}

double kernel_density(const KernelSpec& spec, double x) {
  switch (spec.shape) {
    case KernelShape::TopHat:
      return std::abs(x) <= spec.radius ? 1.0 / (2.0 * spec.radius) : 0.0;
    case KernelShape::Gaussian: {
      const double z = x / spec.radius;
      return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * pi) * spec.radius);
    }
    case KernelShape::Exponential:
      return std::exp(-std::abs(x) / spec.radius) / (2.0 * spec.radius);
    case KernelShape::Delta:
      throw ConfigError("delta kernel has no pointwise density; it acts as identity convolution");
  }
  return 0.0;
}

double kernel_cdf(const KernelSpec& spec, double x) {
  const double R = spec.radius;
  switch (spec.shape) {
    case KernelShape::TopHat:
      if (x <= -R) return 0.0;
      if (x >= R) return 1.0;
      return (x + R) / (2.0 * R);
    case KernelShape::Gaussian:
      return 0.5 * (1.0 + std::erf(x / (R * std::sqrt(2.0))));
    case KernelShape::Exponential:
      return x < 0.0 ? 0.5 * std::exp(x / R) : 1.0 - 0.5 * std::exp(-x / R);
    case KernelShape::Delta:
      return x < 0.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

std::vector<double> kernel_weights(const KernelSpec& spec, const Grid& grid) {
  validate_kernel(spec);
  if (spec.is_delta()) return {1.0};
  if (spec.radius >= grid.length) {
    throw ConfigError("perceptual radius must be smaller than the habitat length");
  }
  const double dx = grid.dx;
  const double R = spec.radius;
  int m = 0;
  switch (spec.shape) {
    case KernelShape::TopHat:
      m = static_cast<int>(std::ceil(R / dx + 0.5));
      break;
    case KernelShape::Gaussian:
      // erfc tail beyond 9 sigma is ~ 1e-19
      m = static_cast<int>(std::ceil(9.0 * R / dx));
      break;
    case KernelShape::Exponential:
      // exp(-40) / 2 ~ 2e-18
      m = static_cast<int>(std::ceil(40.0 * R / dx));
      break;
    case KernelShape::Delta:
      break;
  }
  m = std::max(m, 1);
  std::vector<double> weights(static_cast<std::size_t>(2 * m + 1), 0.0);
  for (int j = -m; j <= m; ++j) {
    const double lo = (j - 0.5) * dx;
    const double hi = (j + 0.5) * dx;
    weights[static_cast<std::size_t>(j + m)] = kernel_cdf(spec, hi) - kernel_cdf(spec, lo);
  }
  return weights;
}

Field perceive(const Field& a, const KernelSpec& spec) {
  if (spec.is_delta()) return a;
  return perceive(a, spec, kernel_weights(spec, a.grid));
}

Field perceive(const Field& a, const KernelSpec& spec, const std::vector<double>& weights) {
  if (spec.is_delta()) return a;
  if (a.grid.periodic()) {
    if (is_power_of_two(static_cast<std::size_t>(a.grid.n_cells))) {
      return perceive_periodic_fft(a, weights);
    }
    return perceive_periodic_direct(a, weights);
  }
  return perceive_bounded(a, spec, weights);
}

Field perceive_direct(const Field& a, const KernelSpec& spec) {
  if (spec.is_delta()) return a;
  const std::vector<double> weights = kernel_weights(spec, a.grid);
  if (a.grid.periodic()) return perceive_periodic_direct(a, weights);
  return perceive_bounded(a, spec, weights);
}

double fourier_symbol(const KernelSpec& spec, double k) {
  const double R = spec.radius;
  switch (spec.shape) {
    case KernelShape::Delta:
      return 1.0;
    case KernelShape::TopHat: {
      const double z = k * R;
      if (std::abs(z) < 1e-8) return 1.0 - z * z / 6.0;
      return std::sin(z) / z;
    }
    case KernelShape::Gaussian:
      return std::exp(-0.5 * k * k * R * R);
    case KernelShape::Exponential:
      return 1.0 / (1.0 + k * k * R * R);
  }
  return 1.0;
}

}  // namespace cogmove
