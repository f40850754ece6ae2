#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cogmove/models.hpp"
#include "cogmove/system.hpp"

namespace cogmove {

enum class AdvectionScheme { Upwind, Central };

struct StepConfig {
  // dt <= 0 selects automatic stepping from the CFL number and the explicit
  // stiffness bound; a positive dt is used as given and rejected on CFL
  // violation.
  double dt = 0.0;
  double cfl = 0.4;
  double t_end = 1.0;
  double snapshot_every = 0.1;
  double dt_max = 0.05;
  AdvectionScheme advection = AdvectionScheme::Upwind;
  double mass_drift_tol = 1e-8;    // diagnostic threshold recorded per run
  double linear_tol = 1e-12;       // tridiagonal solve residual guard
  bool normalize_initial = false;  // scale populations to unit mass at t = 0
};

struct Trajectory {
  std::vector<std::string> field_names;
  std::vector<bool> is_population;
  Grid grid;

  std::vector<double> times;                       // snapshot times
  std::vector<std::vector<Field>> snapshots;       // per snapshot, per field

  // per-step diagnostics
  std::vector<double> step_times;
  std::vector<double> dt_history;
  std::vector<std::vector<double>> mass_history;   // per step, per population
  std::vector<std::vector<double>> min_history;    // per step, per field
  std::vector<double> growth_history;              // per step, dt * integral of f over populations

  std::vector<double> initial_mass;                // per population
  double max_relative_mass_drift = 0.0;            // conserving runs only
  long steps = 0;
  std::optional<std::string> divergence;           // set on early termination

  const std::vector<Field>& final_fields() const { return snapshots.back(); }
  double final_time() const { return times.back(); }
};

// One IMEX step: explicit upwinded advection and reactions, implicit
// (backward Euler) diffusion on the conservative flux stencil. Boundary
// faces carry the flux dictated by the grid's boundary condition; under
// ZeroFlux with no reaction the step conserves total mass to roundoff.
SimState step(const SystemRHS& system, const SimState& state, double dt,
              AdvectionScheme scheme = AdvectionScheme::Upwind,
              const HistoryBuffer* history = nullptr);

// Integrates the compiled model from the initial fields. `u0` may carry just
// the populations (auxiliary fields then start from their built-in defaults)
// or every compiled field. Divergence terminates the run early and is
// recorded on the trajectory rather than thrown.
Trajectory run(const ModelSpec& model, const Grid& grid, const std::vector<Field>& u0,
               const StepConfig& cfg);

// Expands population initial data to the full compiled field list: cognitive
// maps start at the pointwise equilibrium of their own equation (zero where
// the decay rate vanishes) and distributed-delay stages at the lemma's t = 0
// quadrature of the constant continuation.
std::vector<Field> expand_initial_fields(const ModelSpec& model, const SystemRHS& system,
                                         const std::vector<Field>& populations);

// Analytic zero-flux steady state of the perceived-resource model in the
// local (delta kernel) limit: Z^-1 exp(gamma m / d) with unit total mass.
Field steady_state_local_limit(const Field& m, double gamma, double d);

struct AttractorVerdict {
  enum class Kind { Steady, Periodic, Undetermined };
  Kind kind = Kind::Undetermined;
  double period = 0.0;

  bool steady() const { return kind == Kind::Steady; }
  bool periodic() const { return kind == Kind::Periodic; }
};

const char* attractor_kind_name(AttractorVerdict::Kind kind);

// Classifies the trajectory tail: Steady when the fields stop moving,
// Periodic with the cycle length read off successive probe maxima (the probe
// is the mass-weighted first moment), otherwise Undetermined.
AttractorVerdict detect_attractor(const Trajectory& traj, double tail_fraction = 0.5,
                                  double tol = 1e-6);

// Core detector on a scalar probe series (exposed for synthetic signals).
AttractorVerdict detect_attractor_probe(const std::vector<double>& times,
                                        const std::vector<double>& probe, double tol);

}  // namespace cogmove
