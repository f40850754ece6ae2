#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "cogmove/models.hpp"

namespace cogmove {

// Per-mode linear growth about the homogeneous steady state. Wavenumbers are
// k_j = 2 pi j / L on periodic grids and j pi / L under Neumann/ZeroFlux.
struct DispersionResult {
  std::vector<int> mode_index;
  std::vector<double> wavenumber;
  std::vector<std::complex<double>> growth;  // leading eigenvalue per mode
  std::vector<int> unstable;                 // mode indices with Re > 0

  int max_unstable_index() const;
  double max_growth() const;
};

// lambda(k) = -d k^2 + gamma u* k^2 ghat(k) for the self-aggregation model;
// a derived construction cross-checked against seeded-mode simulation.
double dispersion_aggregation(double d, double gamma, double u_star, const KernelSpec& kernel,
                              double k);

struct CharacteristicRoot {
  std::complex<double> lambda;
  bool branch_jump = false;  // continuation moved discontinuously
};

// Leading root of lambda = -d1 k^2 + gamma u* k^2 ghat(k) exp(-lambda tau)
// + fprime, tracked by damped Newton with continuation from tau = 0. The
// real crossing (lambda = 0) satisfies gamma u* ghat(k) = d1 - fprime / k^2,
// which carries no tau.
CharacteristicRoot delay_characteristic_root(double d1, double gamma, double u_star,
                                             double fprime, double tau, double k,
                                             const KernelSpec& kernel, double tol = 1e-12);

// Advection rate at which the real crossing happens for mode k; found by
// bisection on the leading root so the tau-independence can be tested
// against the closed form.
double delay_instability_threshold(double d1, double u_star, double fprime, double tau, double k,
                                   const KernelSpec& kernel, double tol = 1e-10);

// Linearized per-mode analysis for the families with constant steady states
// (aggregation, marks, conflict zones). `u_star` holds the uniform levels of
// the populations; map levels follow from the steady-state algebra.
DispersionResult analyze_dispersion(const ModelSpec& spec, double length, BcKind bc,
                                    const std::vector<double>& u_star, int j_max);

// Mode indices with positive leading growth; thin wrapper over the analysis.
std::vector<int> unstable_set(const ModelSpec& spec, double length, BcKind bc,
                              const std::vector<double>& u_star, int j_max);

struct LogisticEigenvalue {
  double mu1;
  double d_mu1_dD;
  double d_mu1_dr;
  double d_mu1_dL;
};

// Principal eigenvalue of the linearized diffusive-logistic problem about
// u = 1 (Neumann) or u = 0 (Dirichlet): mu1 = -r, respectively
// mu1 = -r/D + (pi/L)^2, with its parameter sensitivities.
LogisticEigenvalue logistic_eigenvalue(double D, double r, double L, BcKind bc);

}  // namespace cogmove
