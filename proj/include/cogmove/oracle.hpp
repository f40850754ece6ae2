#pragma once

#include <string>
#include <vector>

#include "cogmove/expression.hpp"
#include "cogmove/grid.hpp"

namespace cogmove {

// Symmetric discrete dispersal kernel on the lattice, a sampled Gaussian of
// standard deviation sigma truncated at six sigma and renormalized to unit
// sum. One application represents tau_step time units of movement.
struct LatticeKernel {
  double sigma = 0.1;
  double tau_step = 0.01;
  double spacing = 0.0;          // lattice spacing
  int half_width = 0;            // offsets -half_width .. half_width
  std::vector<double> weights;   // odd length, symmetric, sums to 1

  double moment(int p) const;    // M_p = sum |z|^p K(z)
};

LatticeKernel build_lattice_kernel(double sigma, double tau_step, double spacing);

// w(x) = exp(sum_i beta_i a_i(x)) tabulated at the lattice sites.
std::vector<double> build_weight_field(const Grid& lattice, const std::vector<Expression>& a,
                                       const std::vector<double>& beta);

// One master-equation step: p'(x) = sum_y K(x - y) w(x) / N(y) p(y) with the
// per-source normalizer N(y) = sum_z K(z - y) w(z). The normalizer runs over
// the lattice, so total probability is conserved exactly.
std::vector<double> master_step(const std::vector<double>& p, const LatticeKernel& kernel,
                                const std::vector<double>& w);

struct DriftDiffusion {
  double drift = 0.0;       // E[dx] / tau
  double diffusion = 0.0;   // E[dx^2] / (2 tau)
  double skew_rate = 0.0;   // E[dx^3] / tau
};

// One-step conditional moments from a point mass at lattice index x0,
// computed by exact summation. The kernel stencil must fit inside the
// lattice around x0.
DriftDiffusion estimate_drift_diffusion(const LatticeKernel& kernel,
                                        const std::vector<double>& w, int x0_index);

struct FokkerPlanckSample {
  double x = 0.0;
  double drift = 0.0;             // measured c_hat
  double predicted_drift = 0.0;   // 2 d_hat sum_i beta_i a_i'(x)
  double relative_deviation = 0.0;
};

struct FokkerPlanckReport {
  double diffusion_1d = 0.0;        // M2 / (2 tau), the one-dimensional constant
  double diffusion_2d_convention = 0.0;  // M2 / (4 tau), the planar convention
  double max_relative_deviation = 0.0;   // over samples with a usable target
  std::vector<FokkerPlanckSample> samples;
  bool pde_compared = false;
  double l1_distance = 0.0;         // master vs advection-diffusion run at t = 1
};

// Tabulates the measured drift against the exponential-weighting prediction
// 2 d grad(sum beta_i a_i) across the lattice and, when requested, evolves
// the master equation and the matching advection-diffusion equation side by
// side from the same initial bump, reporting their L1 distance at t_final.
FokkerPlanckReport verify_fokker_planck(const std::vector<Expression>& a,
                                        const std::vector<double>& beta, double sigma,
                                        double tau_step, const Grid& lattice,
                                        bool pde_compare = true, double t_final = 1.0);

}  // namespace cogmove
