#include "cogmove/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cogmove {

namespace {

// Thomas algorithm for a tridiagonal system with constant off-diagonals.
// diag entries vary at the boundary rows.
void solve_tridiagonal(double lower, const std::vector<double>& diag, double upper,
                       std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> scratch(n);
  double pivot = diag[0];
  rhs[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    scratch[i] = upper / pivot;
    pivot = diag[i] - lower * scratch[i];
    rhs[i] = (rhs[i] - lower * rhs[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] -= scratch[i + 1] * rhs[i + 1];
  }
}

// Cyclic variant via the Sherman-Morrison correction; corners equal `corner`.
void solve_cyclic_tridiagonal(double lower, std::vector<double> diag, double upper, double corner,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  const double gamma = -diag[0];
  diag[0] -= gamma;
  diag[n - 1] -= corner * corner / gamma;

  std::vector<double> z(n, 0.0);
  z[0] = gamma;
  z[n - 1] = corner;

  std::vector<double> diag_copy = diag;
  solve_tridiagonal(lower, diag, upper, rhs);
  solve_tridiagonal(lower, diag_copy, upper, z);

  const double vx = rhs[0] + corner / gamma * rhs[n - 1];
  const double vz = z[0] + corner / gamma * z[n - 1];
  const double factor = vx / (1.0 + vz);
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= factor * z[i];
}

// Backward Euler diffusion solve in place: (I - dt D Lap) u' = u.
void implicit_diffusion(std::vector<double>& u, const Grid& grid, double D, double dt) {
  if (D <= 0.0) return;
  const double a = D * dt / (grid.dx * grid.dx);
  const std::size_t n = u.size();
  std::vector<double> diag(n, 1.0 + 2.0 * a);
  switch (grid.bc.kind) {
    case BcKind::Periodic:
      solve_cyclic_tridiagonal(-a, std::move(diag), -a, -a, u);
      return;
    case BcKind::ZeroFlux:
    case BcKind::Neumann:
    case BcKind::Robin:
      // no implicit flux through the walls (Robin loss is applied explicitly)
      diag[0] = 1.0 + a;
      diag[n - 1] = 1.0 + a;
      break;
    case BcKind::Dirichlet:
      // ghost mirrored through u = 0
      diag[0] = 1.0 + 3.0 * a;
      diag[n - 1] = 1.0 + 3.0 * a;
      break;
  }
  solve_tridiagonal(-a, diag, -a, u);
}

// Advective face fluxes F with F_f sitting between cells f-1 and f.
std::vector<double> advective_fluxes(const std::vector<double>& u, const Grid& grid,
                                     const std::vector<double>& vel, AdvectionScheme scheme) {
  const int n = grid.n_cells;
  std::vector<double> flux(static_cast<std::size_t>(n) + 1, 0.0);
  auto face_value = [&](double v, double u_left, double u_right) {
    if (scheme == AdvectionScheme::Central) return v * 0.5 * (u_left + u_right);
    return v * (v >= 0.0 ? u_left : u_right);
  };
  for (int f = 1; f < n; ++f) {
    flux[f] = face_value(vel[f], u[f - 1], u[f]);
  }
  switch (grid.bc.kind) {
    case BcKind::Periodic:
      flux[0] = face_value(vel[0], u[n - 1], u[0]);
      flux[n] = flux[0];
      break;
    case BcKind::ZeroFlux:
      flux[0] = 0.0;
      flux[n] = 0.0;
      break;
    case BcKind::Neumann:
      // zero-gradient ghost: the advective part leaks through the wall
      flux[0] = vel[0] * u[0];
      flux[n] = vel[n] * u[n - 1];
      break;
    case BcKind::Dirichlet:
      // hostile exterior holds u = 0
      flux[0] = vel[0] >= 0.0 ? 0.0 : vel[0] * u[0];
      flux[n] = vel[n] >= 0.0 ? vel[n] * u[n - 1] : 0.0;
      break;
    case BcKind::Robin:
      // handled by the combined wall flux below
      flux[0] = 0.0;
      flux[n] = 0.0;
      break;
  }
  return flux;
}

// Robin walls carry the full (diffusive + advective) flux explicitly:
//   left wall  F = u (V - D beta/alpha), right wall F = u (V + D beta/alpha).
// With alpha = D and beta = -da/dn this vanishes and ZeroFlux is recovered.
void add_robin_wall_fluxes(std::vector<double>& flux, const std::vector<double>& u,
                           const Grid& grid, double D, const std::vector<double>* vel) {
  const double a = grid.bc.robin_alpha;
  const double b = grid.bc.robin_beta;
  const int n = grid.n_cells;
  const double v0 = vel != nullptr ? (*vel)[0] : 0.0;
  const double vn = vel != nullptr ? (*vel)[n] : 0.0;
  flux[0] = u[0] * (v0 - D * b / a);
  flux[n] = u[n - 1] * (vn + D * b / a);
}

struct StepDiagnostics {
  double max_velocity = 0.0;
};

SimState step_with_velocities(const SystemRHS& system, const SimState& state, double dt,
                              AdvectionScheme scheme,
                              const std::vector<std::vector<double>>& velocities,
                              const std::vector<std::vector<double>>& reactions) {
  const Grid& grid = system.grid;
  SimState next;
  next.t = state.t + dt;
  next.fields = state.fields;

  for (std::size_t f = 0; f < system.n_fields(); ++f) {
    std::vector<double>& u = next.fields[f].values;
    const std::vector<double>& u_old = state.fields[f].values;

    const bool advects = f < velocities.size() && !velocities[f].empty();
    const bool robin = grid.bc.kind == BcKind::Robin;
    if (advects || (robin && system.diffusion[f] > 0.0)) {
      std::vector<double> flux =
          advects ? advective_fluxes(u_old, grid, velocities[f], scheme)
                  : std::vector<double>(static_cast<std::size_t>(grid.n_cells) + 1, 0.0);
      if (robin) {
        add_robin_wall_fluxes(flux, u_old, grid, system.diffusion[f],
                              advects ? &velocities[f] : nullptr);
      }
      const double lambda = dt / grid.dx;
      for (int i = 0; i < grid.n_cells; ++i) {
        u[i] -= lambda * (flux[i + 1] - flux[i]);
      }
    }
    if (f < reactions.size() && !reactions[f].empty()) {
      for (int i = 0; i < grid.n_cells; ++i) {
        u[i] += dt * reactions[f][i];
      }
    }
    implicit_diffusion(u, grid, system.diffusion[f], dt);
  }
  return next;
}

double max_face_speed(const std::vector<std::vector<double>>& velocities) {
  double vmax = 0.0;
  for (const auto& vel : velocities) {
    for (double v : vel) vmax = std::max(vmax, std::abs(v));
  }
  return vmax;
}

std::optional<std::string> check_field_health(const SimState& state,
                                              const std::vector<std::string>& names) {
  for (std::size_t f = 0; f < state.fields.size(); ++f) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = 0.0;
    for (double v : state.fields[f].values) {
      if (!std::isfinite(v)) {
        return "field '" + names[f] + "' contains a non-finite value at t = " +
               std::to_string(state.t);
      }
      mn = std::min(mn, v);
      mx = std::max(mx, std::abs(v));
    }
    if (mn < -1e-10 * std::max(1.0, mx)) {
      std::ostringstream msg;
      msg << "field '" << names[f] << "' undershot to " << mn << " at t = " << state.t;
      return msg.str();
    }
  }
  return std::nullopt;
}

}  // namespace

SimState step(const SystemRHS& system, const SimState& state, double dt, AdvectionScheme scheme,
              const HistoryBuffer* history) {
  if (system.needs_history && history == nullptr) {
    throw std::logic_error("this system needs a history buffer");
  }
  const auto velocities = system.face_velocities
                              ? system.face_velocities(state, history)
                              : std::vector<std::vector<double>>(system.n_fields());
  const double vmax = max_face_speed(velocities);
  if (vmax * dt / system.grid.dx > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "step rejected: CFL violation (max speed " << vmax << ", dt " << dt << ", dx "
        << system.grid.dx << ")";
    throw NumericsError(msg.str());
  }
  const auto reactions = system.reactions(state, history);
  SimState next = step_with_velocities(system, state, dt, scheme, velocities, reactions);
  if (auto problem = check_field_health(next, system.field_names)) {
    throw NumericsError("divergence: " + *problem);
  }
  return next;
}

std::vector<Field> expand_initial_fields(const ModelSpec& model, const SystemRHS& system,
                                         const std::vector<Field>& populations) {
  const std::size_t n_pop = model.population_count();
  if (populations.size() != n_pop) {
    throw ConfigError("expected " + std::to_string(n_pop) + " population fields, got " +
                      std::to_string(populations.size()));
  }
  std::vector<Field> fields = populations;
  const Grid& grid = system.grid;

  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Marks>) {
          for (std::size_t i = 0; i < n_pop; ++i) {
            Field p = make_field(grid);
            if (fam.mu > 0.0) {
              for (int c = 0; c < grid.n_cells; ++c) {
                double growth = 0.0;
                for (std::size_t j = 0; j < n_pop; ++j) {
                  growth += fam.alpha[i][j] * populations[j].values[c];
                }
                p.values[c] = growth / fam.mu;
              }
            }
            fields.push_back(std::move(p));
          }
        } else if constexpr (std::is_same_v<T, ConflictZones>) {
          for (std::size_t i = 0; i < n_pop; ++i) {
            Field k = make_field(grid);
            for (int c = 0; c < grid.n_cells; ++c) {
              double encounters = 0.0;
              for (std::size_t j = 0; j < n_pop; ++j) {
                if (j != i) encounters += fam.rho[i][j] * populations[j].values[c];
              }
              const double growth = populations[i].values[c] * encounters;
              const double decay = fam.mu + fam.beta * populations[i].values[c];
              if (fam.variant == ConflictZones::Variant::Magnitude) {
                k.values[c] = decay > 0.0 ? growth / decay : 0.0;
              } else {
                k.values[c] = growth + decay > 0.0 ? growth / (growth + decay) : 0.0;
              }
            }
            fields.push_back(std::move(k));
          }
        } else if constexpr (std::is_same_v<T, ConsumerResource>) {
          if (fam.map != ConsumerResource::MapKind::None) {
            Field q = make_field(grid);
            for (int c = 0; c < grid.n_cells; ++c) {
              const double u = populations[0].values[c];
              const double v = populations[1].values[c];
              if (fam.map == ConsumerResource::MapKind::LinearQ) {
                q.values[c] = fam.mu > 0.0 ? fam.b * v / fam.mu : 0.0;
              } else {
                const double decay = fam.mu + fam.xi * u;
                q.values[c] = decay > 0.0 ? fam.b * u * v / decay : 0.0;
              }
            }
            fields.push_back(std::move(q));
          }
        } else if constexpr (std::is_same_v<T, ShortLong>) {
          Field ms = make_field(grid);
          Field ml = make_field(grid);
          for (int c = 0; c < grid.n_cells; ++c) {
            const double x = grid.center(c);
            ms.values[c] = fam.alpha_s * fam.a_s.eval(x, 0.0) / fam.beta_s;
            ml.values[c] = fam.alpha_l * fam.a_l.eval(x, 0.0) / fam.beta_l;
          }
          fields.push_back(std::move(ms));
          fields.push_back(std::move(ml));
        } else if constexpr (std::is_same_v<T, Distributed>) {
          if (fam.path == Distributed::Path::Augmented) {
            // stage values at t = 0 from the constant continuation of u0
            HistoryBuffer warm({populations[0]}, 0.0, 1.0);
            fields.push_back(direct_distributed_convolution(
                warm, TemporalKernelSpec::weak(fam.temporal.tau), fam.d3, grid, 0));
            if (fam.temporal.kind == TemporalKind::Strong) {
              fields.push_back(direct_distributed_convolution(
                  warm, TemporalKernelSpec::strong(fam.temporal.tau), fam.d3, grid, 0));
            }
          }
        }
      },
      model.family);

  if (fields.size() != system.n_fields()) {
    throw std::logic_error("initial field expansion does not match the compiled system");
  }
  return fields;
}

Trajectory run(const ModelSpec& model, const Grid& grid, const std::vector<Field>& u0,
               const StepConfig& cfg) {
  SystemRHS system = compile_model(model, grid);
  std::vector<Field> fields = u0.size() == system.n_fields()
                                  ? u0
                                  : expand_initial_fields(model, system, u0);
  for (const Field& f : fields) {
    if (f.values.size() != static_cast<std::size_t>(grid.n_cells)) {
      throw ConfigError("initial field size does not match the grid");
    }
  }
  if (cfg.normalize_initial) {
    for (std::size_t f = 0; f < system.n_fields(); ++f) {
      if (!system.is_population[f]) continue;
      const double m = total_mass(fields[f]);
      if (m <= 0.0) throw ConfigError("cannot normalize a field with nonpositive mass");
      for (double& v : fields[f].values) v /= m;
    }
  }
  if (const auto* conflict = std::get_if<ConflictZones>(&model.family);
      conflict != nullptr && conflict->variant == ConflictZones::Variant::Probability) {
    for (std::size_t f = system.n_fields() / 2; f < system.n_fields(); ++f) {
      for (double v : fields[f].values) {
        if (v < 0.0 || v > 1.0) {
          throw ConfigError("probability-variant conflict maps must start inside [0, 1]");
        }
      }
    }
  }

  Trajectory traj;
  traj.field_names = system.field_names;
  traj.is_population = system.is_population;
  traj.grid = grid;

  SimState state{0.0, std::move(fields)};
  for (std::size_t f = 0; f < system.n_fields(); ++f) {
    if (system.is_population[f]) traj.initial_mass.push_back(total_mass(state.fields[f]));
  }

  std::optional<HistoryBuffer> history;
  if (system.needs_history) {
    history.emplace(state.fields, 0.0, system.history_horizon);
  }

  const double eps = 1e-12 * std::max(1.0, cfg.t_end);
  double next_snapshot = cfg.snapshot_every;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(state.fields);

  auto record_diagnostics = [&](const SimState& s, double dt) {
    traj.step_times.push_back(s.t);
    traj.dt_history.push_back(dt);
    std::vector<double> masses;
    std::vector<double> mins;
    std::size_t pop_index = 0;
    for (std::size_t f = 0; f < system.n_fields(); ++f) {
      double mn = s.fields[f].values[0];
      for (double v : s.fields[f].values) mn = std::min(mn, v);
      mins.push_back(mn);
      if (system.is_population[f]) {
        const double m = total_mass(s.fields[f]);
        masses.push_back(m);
        const double m0 = traj.initial_mass[pop_index];
        const double drift = std::abs(m - m0) / std::max(std::abs(m0), 1e-300);
        traj.max_relative_mass_drift = std::max(traj.max_relative_mass_drift, drift);
        ++pop_index;
      }
    }
    traj.mass_history.push_back(std::move(masses));
    traj.min_history.push_back(std::move(mins));
  };

  while (state.t < cfg.t_end - eps) {
    const HistoryBuffer* hist = history ? &*history : nullptr;
    std::vector<std::vector<double>> velocities =
        system.face_velocities ? system.face_velocities(state, hist)
                               : std::vector<std::vector<double>>(system.n_fields());
    const double vmax = max_face_speed(velocities);

    double dt;
    if (cfg.dt > 0.0) {
      dt = cfg.dt;
      if (vmax * dt / grid.dx > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "step rejected at t = " << state.t << ": CFL violation (max speed " << vmax
            << ", dt " << dt << ", dx " << grid.dx << ")";
        throw NumericsError(msg.str());
      }
    } else {
      dt = cfg.dt_max;
      if (vmax > 0.0) dt = std::min(dt, cfg.cfl * grid.dx / vmax);
      const double stiffness = system.stiffness_bound(state);
      if (stiffness > 0.0) dt = std::min(dt, 0.9 / stiffness);
      if (system.max_delay > 0.0) dt = std::min(dt, system.max_delay / 20.0);
      if (dt < 1e-14) {
        throw NumericsError("time step collapsed below 1e-14 at t = " + std::to_string(state.t));
      }
    }
    dt = std::min(dt, cfg.t_end - state.t);
    if (next_snapshot < cfg.t_end + eps && state.t + dt > next_snapshot + eps) {
      dt = next_snapshot - state.t;
    }

    const auto reactions = system.reactions(state, hist);
    // the discrete Gauss identity: this increment is exactly the reaction
    // contribution to the population mass over the step
    double growth_increment = 0.0;
    for (std::size_t f = 0; f < system.n_fields(); ++f) {
      if (!system.is_population[f] || f >= reactions.size() || reactions[f].empty()) continue;
      double cell_sum = 0.0;
      for (double v : reactions[f]) cell_sum += v;
      growth_increment += dt * grid.dx * cell_sum;
    }
    traj.growth_history.push_back(growth_increment);

    SimState next = step_with_velocities(system, state, dt, cfg.advection, velocities, reactions);
    ++traj.steps;

    if (auto problem = check_field_health(next, system.field_names)) {
      traj.divergence = *problem;
      record_diagnostics(next, dt);
      break;
    }

    state = std::move(next);
    record_diagnostics(state, dt);
    if (history) history->push(state.t, state.fields);

    if (state.t >= next_snapshot - eps && next_snapshot < cfg.t_end + eps) {
      traj.times.push_back(state.t);
      traj.snapshots.push_back(state.fields);
      while (next_snapshot <= state.t + eps) next_snapshot += cfg.snapshot_every;
    }
  }

  if (traj.times.back() < state.t - eps || traj.snapshots.size() == 1) {
    traj.times.push_back(state.t);
    traj.snapshots.push_back(state.fields);
  }
  return traj;
}

Field steady_state_local_limit(const Field& m, double gamma, double d) {
  if (!(d > 0.0)) throw ConfigError("diffusion rate must be positive");
  Field out = make_field(m.grid);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    out.values[i] = std::exp(gamma * m.values[i] / d);
  }
  const double Z = total_mass(out);
  for (double& v : out.values) v /= Z;
  return out;
}

const char* attractor_kind_name(AttractorVerdict::Kind kind) {
  switch (kind) {
    case AttractorVerdict::Kind::Steady: return "steady";
    case AttractorVerdict::Kind::Periodic: return "periodic";
    case AttractorVerdict::Kind::Undetermined: return "undetermined";
  }
  return "unknown";
}

AttractorVerdict detect_attractor_probe(const std::vector<double>& times,
                                        const std::vector<double>& probe, double tol) {
  AttractorVerdict verdict;
  if (times.size() < 5) return verdict;

  // plateau first
  double spread = 0.0;
  double scale = 1e-300;
  for (double v : probe) {
    spread = std::max(spread, std::abs(v - probe.back()));
    scale = std::max(scale, std::abs(v));
  }
  if (spread <= tol * std::max(1.0, scale)) {
    verdict.kind = AttractorVerdict::Kind::Steady;
    return verdict;
  }

  // successive interior maxima with quadratic refinement
  std::vector<double> peak_times;
  std::vector<double> peak_values;
  double global_min = probe[0];
  for (double v : probe) global_min = std::min(global_min, v);
  for (std::size_t i = 1; i + 1 < probe.size(); ++i) {
    if (probe[i] > probe[i - 1] && probe[i] >= probe[i + 1]) {
      const double y0 = probe[i - 1], y1 = probe[i], y2 = probe[i + 1];
      const double denom = y0 - 2.0 * y1 + y2;
      double shift = 0.0;
      if (denom != 0.0) shift = 0.5 * (y0 - y2) / denom;
      shift = std::clamp(shift, -0.5, 0.5);
      const double dt_local = 0.5 * (times[i + 1] - times[i - 1]);
      peak_times.push_back(times[i] + shift * dt_local);
      peak_values.push_back(y1 - 0.25 * (y0 - y2) * shift);
    }
  }
  if (peak_times.size() < 3) return verdict;

  double peak_lo = peak_values[0], peak_hi = peak_values[0], peak_mean = 0.0;
  for (double v : peak_values) {
    peak_lo = std::min(peak_lo, v);
    peak_hi = std::max(peak_hi, v);
    peak_mean += v;
  }
  peak_mean /= static_cast<double>(peak_values.size());
  const double amp_scale = std::max({std::abs(peak_mean), peak_mean - global_min, 1e-12});
  if (peak_hi - peak_lo > tol * amp_scale) return verdict;

  double gap_mean = 0.0;
  for (std::size_t i = 1; i < peak_times.size(); ++i) gap_mean += peak_times[i] - peak_times[i - 1];
  gap_mean /= static_cast<double>(peak_times.size() - 1);
  for (std::size_t i = 1; i < peak_times.size(); ++i) {
    if (std::abs(peak_times[i] - peak_times[i - 1] - gap_mean) > 0.1 * gap_mean) return verdict;
  }
  verdict.kind = AttractorVerdict::Kind::Periodic;
  verdict.period = gap_mean;
  return verdict;
}

AttractorVerdict detect_attractor(const Trajectory& traj, double tail_fraction, double tol) {
  AttractorVerdict verdict;
  if (traj.snapshots.size() < 3) return verdict;
  const double t_end = traj.times.back();
  const double t_tail = t_end * (1.0 - tail_fraction);
  std::size_t start = 0;
  while (start + 3 < traj.times.size() && traj.times[start] < t_tail) ++start;

  // field plateau check against the final snapshot
  double change = 0.0;
  double scale = 1e-300;
  const auto& last = traj.snapshots.back();
  for (std::size_t s = start; s < traj.snapshots.size(); ++s) {
    for (std::size_t f = 0; f < last.size(); ++f) {
      for (std::size_t c = 0; c < last[f].values.size(); ++c) {
        change = std::max(change,
                          std::abs(traj.snapshots[s][f].values[c] - last[f].values[c]));
        scale = std::max(scale, std::abs(last[f].values[c]));
      }
    }
  }
  if (change <= tol * std::max(1.0, scale)) {
    verdict.kind = AttractorVerdict::Kind::Steady;
    return verdict;
  }

  // mass-weighted first moment of the first population as the scalar probe
  std::size_t probe_field = 0;
  for (std::size_t f = 0; f < traj.is_population.size(); ++f) {
    if (traj.is_population[f]) {
      probe_field = f;
      break;
    }
  }
  std::vector<double> times(traj.times.begin() + static_cast<long>(start), traj.times.end());
  std::vector<double> probe;
  probe.reserve(times.size());
  for (std::size_t s = start; s < traj.snapshots.size(); ++s) {
    const Field& u = traj.snapshots[s][probe_field];
    double m = 0.0, mx = 0.0;
    for (int i = 0; i < traj.grid.n_cells; ++i) {
      m += u.values[i];
      mx += u.values[i] * traj.grid.center(i);
    }
    probe.push_back(m != 0.0 ? mx / m : 0.0);
  }
  return detect_attractor_probe(times, probe, tol);
}

}  // namespace cogmove
