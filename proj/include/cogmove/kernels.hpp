#pragma once

#include <vector>

#include "cogmove/grid.hpp"

namespace cogmove {

enum class KernelShape { TopHat, Gaussian, Exponential, Delta };

// On bounded domains the kernel is cut off at the habitat edge; no
// information is gathered from outside. CutOffRenormalized rescales the
// surviving weights to unit sum for sensitivity studies.
enum class KernelBoundaryMode { CutOff, CutOffRenormalized };

struct KernelSpec {
  KernelShape shape = KernelShape::Delta;
  double radius = 0.0;
  KernelBoundaryMode boundary_mode = KernelBoundaryMode::CutOff;

  static KernelSpec delta() { return {KernelShape::Delta, 0.0, KernelBoundaryMode::CutOff}; }
  static KernelSpec top_hat(double R) { return {KernelShape::TopHat, R, KernelBoundaryMode::CutOff}; }
  static KernelSpec gaussian(double R) { return {KernelShape::Gaussian, R, KernelBoundaryMode::CutOff}; }
  static KernelSpec exponential(double R) { return {KernelShape::Exponential, R, KernelBoundaryMode::CutOff}; }

  bool is_delta() const { return shape == KernelShape::Delta; }
};

const char* kernel_shape_name(KernelShape shape);
KernelShape kernel_shape_from_name(const std::string& name);

void validate_kernel(const KernelSpec& spec);

// Closed-form density g(x). Each shape integrates to 1 over the line, is
// symmetric about the origin and non-increasing in |x|. Delta has no
// pointwise density and is rejected here; it acts as identity convolution.
double kernel_density(const KernelSpec& spec, double x);

// Cumulative integral of g over (-inf, x]; exact for all three shapes.
double kernel_cdf(const KernelSpec& spec, double x);

// Symmetric discrete stencil of cell-integrated weights. Entry m + j holds
// the exact kernel mass over the cell at offset j from the center, with
// m = (size - 1) / 2. Cell integration keeps the TopHat discontinuity from
// degrading the convergence order of the convolution.
std::vector<double> kernel_weights(const KernelSpec& spec, const Grid& grid);

// Nonlocal perception: discrete convolution of the field with the
// cell-integrated stencil. Periodic grids take a circulant path (an FFT when
// the cell count is a power of two); bounded grids cut the stencil off at
// the domain ends, renormalizing only in CutOffRenormalized mode.
Field perceive(const Field& a, const KernelSpec& spec);
Field perceive(const Field& a, const KernelSpec& spec, const std::vector<double>& weights);

// Forces the direct summation path on periodic grids (test hook for the
// transform-path equivalence property).
Field perceive_direct(const Field& a, const KernelSpec& spec);

// ghat(k) = integral of g(x) cos(kx); equals 1 at k = 0 for every shape.
double fourier_symbol(const KernelSpec& spec, double k);

}  // namespace cogmove
