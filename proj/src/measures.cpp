#include "cogmove/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace cogmove {

const char* measure_kind_name(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::ForagingSuccess: return "foraging_success";
    case MeasureKind::ModifiedForagingSuccess: return "modified_foraging_success";
    case MeasureKind::NetGrowth: return "net_growth";
  }
  return "unknown";
}

MeasureKind measure_kind_from_name(const std::string& name) {
  if (name == "foraging_success") return MeasureKind::ForagingSuccess;
  if (name == "modified_foraging_success") return MeasureKind::ModifiedForagingSuccess;
  if (name == "net_growth") return MeasureKind::NetGrowth;
  throw ConfigError("unknown measure '" + name + "'");
}

namespace {

void check_window(const Trajectory& traj, double t_prime, double t_max) {
  const double eps = 1e-9 * std::max(1.0, traj.times.back());
  if (!(t_prime < t_max)) throw ConfigError("measure window must satisfy t' < t_max");
  if (t_prime < traj.times.front() - eps || t_max > traj.times.back() + eps) {
    throw ConfigError("measure window lies outside the recorded trajectory");
  }
}

// trapezoid over the snapshot integrand S(t) with linear interpolation of S
// at the window ends
double window_trapezoid(const std::vector<double>& times, const std::vector<double>& S,
                        double t_prime, double t_max) {
  auto value_at = [&](double t) {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return S.front();
    if (it == times.end()) return S.back();
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * S[lo] + w * S[hi];
  };
  std::vector<double> ts = {t_prime};
  std::vector<double> vs = {value_at(t_prime)};
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t_prime && times[i] < t_max) {
      ts.push_back(times[i]);
      vs.push_back(S[i]);
    }
  }
  ts.push_back(t_max);
  vs.push_back(value_at(t_max));
  double sum = 0.0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    sum += 0.5 * (vs[i] + vs[i - 1]) * (ts[i] - ts[i - 1]);
  }
  return sum;
}

std::size_t population_field_index(const Trajectory& traj, std::size_t species) {
  std::size_t seen = 0;
  for (std::size_t f = 0; f < traj.is_population.size(); ++f) {
    if (traj.is_population[f]) {
      if (seen == species) return f;
      ++seen;
    }
  }
  throw ConfigError("species index out of range for this model");
}

}  // namespace

double foraging_success(const Trajectory& traj, const ResourceEvaluator& m, double t_prime,
                        double t_max, std::size_t species) {
  check_window(traj, t_prime, t_max);
  const std::size_t field = population_field_index(traj, species);
  const Grid& grid = traj.grid;
  std::vector<double> S(traj.times.size(), 0.0);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    double sum = 0.0;
    const Field& u = traj.snapshots[s][field];
    for (int i = 0; i < grid.n_cells; ++i) {
      sum += u.values[i] * m(grid.center(i), traj.times[s]);
    }
    S[s] = sum * grid.dx;
  }
  return window_trapezoid(traj.times, S, t_prime, t_max);
}

double modified_foraging_success(const Trajectory& traj, const ResourceEvaluator& m, double T,
                                 std::size_t species) {
  if (!(T > 0.0)) throw ConfigError("modified foraging success needs a positive period");
  const double t_max = traj.times.back();
  const double t_prime = t_max - T;
  check_window(traj, t_prime, t_max);
  const std::size_t field = population_field_index(traj, species);
  const Grid& grid = traj.grid;
  std::vector<double> S(traj.times.size(), 0.0);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    if (traj.times[s] < t_prime - 1e-12 || traj.times[s] > t_max + 1e-12) continue;
    double sum = 0.0;
    const Field& u = traj.snapshots[s][field];
    for (int i = 0; i < grid.n_cells; ++i) {
      const double res = m(grid.center(i), traj.times[s]);
      if (res < 1e-12) {
        throw ConfigError("modified foraging success undefined: the resource reaches zero "
                          "inside the window (m > 0 required)");
      }
      sum += u.values[i] / res;
    }
    S[s] = sum * grid.dx / grid.length;
  }
  return window_trapezoid(traj.times, S, t_prime, t_max) / T;
}

NetGrowthReport net_growth(const Trajectory& traj,
                           const std::function<std::vector<double>(const SimState&)>& f,
                           double t_prime, double t_max) {
  check_window(traj, t_prime, t_max);
  const Grid& grid = traj.grid;

  NetGrowthReport report;

  // snapshot quadrature of the reaction integrand
  std::vector<double> S(traj.times.size(), 0.0);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    SimState state{traj.times[s], traj.snapshots[s]};
    const std::vector<double> cells = f(state);
    double sum = 0.0;
    for (double v : cells) sum += v;
    S[s] = sum * grid.dx;
  }
  report.value = window_trapezoid(traj.times, S, t_prime, t_max);

  // exact per-step accumulation over the window snapped to step times
  // (step i covers (step_times[i] - dt_i, step_times[i]])
  double accumulated = 0.0;
  double lo_time = t_prime, hi_time = t_prime;
  std::vector<double> lo_mass, hi_mass;
  bool started = false;
  for (std::size_t i = 0; i < traj.step_times.size(); ++i) {
    const double t_step = traj.step_times[i];
    const double t_before = t_step - traj.dt_history[i];
    if (t_before < t_prime - 1e-12) continue;
    if (t_step > t_max + 1e-12) break;
    if (!started) {
      started = true;
      lo_time = t_before;
      lo_mass = i > 0 ? traj.mass_history[i - 1] : traj.initial_mass;
    }
    accumulated += traj.growth_history[i];
    hi_time = t_step;
    hi_mass = traj.mass_history[i];
  }
  report.step_accumulated = accumulated;
  report.window_start = lo_time;
  report.window_end = hi_time;
  if (!lo_mass.empty() && !hi_mass.empty()) {
    double delta = 0.0;
    for (std::size_t p = 0; p < lo_mass.size(); ++p) delta += hi_mass[p] - lo_mass[p];
    report.mass_difference = delta;
  }
  return report;
}

SweepTable run_sweep(const std::vector<SweepAxis>& axes, MeasureKind measure,
                     const std::function<SweepCellResult(const std::vector<double>&)>& runner,
                     int threads) {
  if (axes.empty()) throw ConfigError("sweep needs at least one axis");
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.key + "' has no values");
    total *= axis.values.size();
  }

  SweepTable table;
  table.axes = axes;
  table.measure = measure;
  table.cells.resize(total);

  // row-major parameter tuples, last axis fastest
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    std::vector<double> params(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      params[a] = axes[a].values[rest % axes[a].values.size()];
      rest /= axes[a].values.size();
    }
    table.cells[idx].params = std::move(params);
  }

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      try {
        table.cells[idx].result = runner(table.cells[idx].params);
      } catch (const std::exception& err) {
        table.cells[idx].result.ok = false;
        table.cells[idx].result.error = err.what();
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  flag_interior_maxima(table);
  return table;
}

void flag_interior_maxima(SweepTable& table) {
  std::vector<std::size_t> strides(table.axes.size(), 1);
  for (std::size_t a = table.axes.size(); a-- > 1;) {
    strides[a - 1] = strides[a] * table.axes[a].values.size();
  }
  for (std::size_t idx = 0; idx < table.cells.size(); ++idx) {
    SweepCell& cell = table.cells[idx];
    cell.interior_max = false;
    if (!cell.result.ok) continue;
    for (std::size_t a = 0; a < table.axes.size(); ++a) {
      const std::size_t count = table.axes[a].values.size();
      const std::size_t pos = idx / strides[a] % count;
      if (pos == 0 || pos + 1 >= count) continue;
      const SweepCell& prev = table.cells[idx - strides[a]];
      const SweepCell& next = table.cells[idx + strides[a]];
      if (!prev.result.ok || !next.result.ok) continue;
      if (cell.result.measure > prev.result.measure &&
          cell.result.measure > next.result.measure) {
        cell.interior_max = true;
        break;
      }
    }
  }
}

}  // namespace cogmove
