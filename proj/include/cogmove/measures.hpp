#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cogmove/stepper.hpp"

namespace cogmove {

enum class MeasureKind { ForagingSuccess, ModifiedForagingSuccess, NetGrowth };

const char* measure_kind_name(MeasureKind kind);
MeasureKind measure_kind_from_name(const std::string& name);

struct MeasureReport {
  MeasureKind kind;
  double value = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  double period = 0.0;  // modified measure only
};

using ResourceEvaluator = std::function<double(double x, double t)>;

// Integral of u * m over the window: trapezoid in time over the stored
// snapshots (integrand interpolated at the window ends), midpoint in space.
double foraging_success(const Trajectory& traj, const ResourceEvaluator& m, double t_prime,
                        double t_max, std::size_t species = 0);

// Time- and space-averaged population per unit resource over the final
// window of length T (one period on a periodic attractor; any window on a
// steady one). The resource must stay above 1e-12 on the window.
double modified_foraging_success(const Trajectory& traj, const ResourceEvaluator& m, double T,
                                 std::size_t species = 0);

struct NetGrowthReport {
  double value = 0.0;             // snapshot-quadrature integral of f
  double step_accumulated = 0.0;  // exact per-step reaction mass increments
  double mass_difference = 0.0;   // population mass change over the window
  double window_start = 0.0;      // snapped to step times for the identity
  double window_end = 0.0;
};

// Integral of the reaction term over the window. `f` returns the combined
// per-cell growth of the population fields at a snapshot state. The report
// carries the per-step accumulated increments, which reproduce the
// population mass difference exactly under conserving boundaries.
NetGrowthReport net_growth(const Trajectory& traj,
                           const std::function<std::vector<double>(const SimState&)>& f,
                           double t_prime, double t_max);

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepAxis {
  std::string key;             // config path, e.g. "kernel.radius"
  std::vector<double> values;
};

struct SweepCellResult {
  bool ok = false;
  std::string error;
  double measure = 0.0;
  std::string attractor = "undetermined";
  double period = 0.0;
  double mass_drift = 0.0;
};

struct SweepCell {
  std::vector<double> params;  // one value per axis
  SweepCellResult result;
  bool interior_max = false;   // strict interior maximum along some 1-D slice
};

struct SweepTable {
  std::vector<SweepAxis> axes;
  MeasureKind measure;
  std::vector<SweepCell> cells;  // row-major, last axis fastest
};

// Runs every cell of the cartesian grid through `runner`, in parallel when
// threads > 1; cells are merged in plan order and individual failures are
// recorded without aborting the sweep.
SweepTable run_sweep(const std::vector<SweepAxis>& axes, MeasureKind measure,
                     const std::function<SweepCellResult(const std::vector<double>&)>& runner,
                     int threads = 1);

// Marks cells that are strict interior maxima of the measure along at least
// one axis slice (the non-monotonicity detector).
void flag_interior_maxima(SweepTable& table);

}  // namespace cogmove
