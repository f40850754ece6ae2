#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cogmove/grid.hpp"
#include "cogmove/memory.hpp"

namespace cogmove {

// Instantaneous state of one simulation. Fields are ordered as declared by
// the SystemRHS that evolves them.
struct SimState {
  double t = 0.0;
  std::vector<Field> fields;
};

// Compiled right-hand side: per-field diffusion rates, the advective face
// velocities built from the potential pipeline (map fields -> perceive ->
// face gradient -> rate), and the reaction/map evaluators. The advective
// flux is assembled in conservative form, u * d/dx(rate * potential), so
// conservation under zero-flux boundaries is structural.
struct SystemRHS {
  Grid grid;
  std::vector<std::string> field_names;
  std::vector<double> diffusion;      // per field; 0 disables the implicit solve
  std::vector<bool> is_population;    // participates in mass diagnostics

  // Face velocities per field (n_cells + 1 entries each); an empty inner
  // vector marks a field that does not advect.
  std::function<std::vector<std::vector<double>>(const SimState&, const HistoryBuffer*)>
      face_velocities;

  // Reaction and cognitive-map right-hand sides, one value per cell and field.
  std::function<std::vector<std::vector<double>>(const SimState&, const HistoryBuffer*)>
      reactions;

  // Upper bound on the fastest explicit decay/growth rate at the given
  // state; the auto time step keeps dt below the reciprocal.
  std::function<double(const SimState&)> stiffness_bound;

  bool has_reactions = false;
  bool needs_history = false;
  double max_delay = 0.0;    // largest discrete delay or distributed horizon
  double history_horizon = 0.0;

  // Families whose construction is not printed in full anywhere are flagged
  // so reports can mark the result as a derived construction.
  std::vector<std::string> construction_flags;

  std::size_t n_fields() const { return field_names.size(); }
};

}  // namespace cogmove
