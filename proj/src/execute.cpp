#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "cogmove/config.hpp"
#include "cogmove/output.hpp"
#include "cogmove/stability.hpp"

namespace cogmove {

namespace {

using Json = nlohmann::ordered_json;

int thread_count_from_env() {
  const char* raw = std::getenv("COGMOVE_THREADS");
  if (raw == nullptr) return 1;
  const int n = std::atoi(raw);
  return n > 0 ? n : 1;
}

std::string hash_string(std::uint64_t hash) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Json base_summary(const RunPlan& plan) {
  Json j;
  j["tool"] = "cogmove";
  j["version"] = version;
  j["subcommand"] = subcommand_name(plan.subcommand);
  j["config_hash"] = hash_string(plan.config_hash);
  Json cfg = Json::object();
  for (const auto& [key, value] : plan.echo) cfg[key] = value;
  j["config"] = cfg;
  j["defaults_applied"] = plan.defaults_applied;
  j["warnings"] = plan.warnings;
  j["tolerances"] = {{"mass_drift", plan.stepping.mass_drift_tol},
                     {"linear", plan.stepping.linear_tol}};
  return j;
}

void write_summary(const std::string& out_dir, const Json& summary) {
  write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
}

std::string trajectory_csv(const Trajectory& traj) {
  CsvWriter csv({"t", "x", "field", "value"});
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    for (std::size_t f = 0; f < traj.field_names.size(); ++f) {
      for (int i = 0; i < traj.grid.n_cells; ++i) {
        csv.add_row({CsvWriter::cell(traj.times[s]), CsvWriter::cell(traj.grid.center(i)),
                     traj.field_names[f], CsvWriter::cell(traj.snapshots[s][f].values[i])});
      }
    }
  }
  return csv.str();
}

ResourceEvaluator measure_resource(const RunPlan& plan) {
  if (!plan.measure.resource) {
    throw ConfigError("this measure needs a resource: set measure.resource");
  }
  const Expression expr = *plan.measure.resource;
  return [expr](double x, double t) { return expr.eval(x, t); };
}

struct SimulationOutcome {
  Trajectory trajectory;
  AttractorVerdict attractor;
  SystemRHS system;
};

SimulationOutcome run_plan_simulation(const RunPlan& plan) {
  SimulationOutcome out;
  out.system = compile_model(plan.model, plan.grid);
  const std::vector<Field> fields = build_initial_fields(plan, out.system);
  out.trajectory = run(plan.model, plan.grid, fields, plan.stepping);
  out.attractor = detect_attractor(out.trajectory);
  return out;
}

Json attractor_json(const AttractorVerdict& verdict) {
  Json j;
  j["kind"] = attractor_kind_name(verdict.kind);
  j["period"] = verdict.period;
  return j;
}

Json simulation_json(const RunPlan& plan, const SimulationOutcome& outcome) {
  const Trajectory& traj = outcome.trajectory;
  Json j;
  j["status"] = traj.divergence ? "diverged" : "ok";
  if (traj.divergence) j["divergence"] = *traj.divergence;
  j["steps"] = traj.steps;
  j["t_final"] = traj.final_time();
  j["initial_mass"] = traj.initial_mass;
  std::vector<double> final_mass;
  std::size_t pop = 0;
  for (std::size_t f = 0; f < traj.field_names.size(); ++f) {
    if (traj.is_population[f]) {
      final_mass.push_back(total_mass(traj.final_fields()[f]));
      ++pop;
    }
  }
  j["final_mass"] = final_mass;
  j["max_relative_mass_drift"] = traj.max_relative_mass_drift;
  j["mass_drift_within_tolerance"] =
      traj.max_relative_mass_drift <= plan.stepping.mass_drift_tol;
  std::vector<double> min_values;
  for (std::size_t f = 0; f < traj.field_names.size(); ++f) {
    double mn = traj.final_fields()[f].values[0];
    for (double v : traj.final_fields()[f].values) mn = std::min(mn, v);
    min_values.push_back(mn);
  }
  j["field_names"] = traj.field_names;
  j["final_min_values"] = min_values;
  j["attractor"] = attractor_json(outcome.attractor);
  j["construction_flags"] = outcome.system.construction_flags;
  return j;
}

int execute_simulate(const RunPlan& plan, const std::string& out_dir) {
  const SimulationOutcome outcome = run_plan_simulation(plan);
  Json summary = base_summary(plan);
  summary["simulation"] = simulation_json(plan, outcome);
  std::vector<std::string> outputs = {"summary.json"};
  if (plan.write_trajectory) {
    write_text_file(out_dir + "/trajectory.csv", trajectory_csv(outcome.trajectory));
    outputs.push_back("trajectory.csv");
  }
  summary["outputs"] = outputs;
  write_summary(out_dir, summary);
  return outcome.trajectory.divergence ? 3 : 0;
}

struct MeasureValues {
  std::vector<MeasureReport> reports;
  std::optional<NetGrowthReport> net_growth_identity;
};

MeasureValues compute_measures(const RunPlan& plan, const SimulationOutcome& outcome,
                               MeasureKind kind) {
  const Trajectory& traj = outcome.trajectory;
  const double t_end = traj.final_time();
  const double t_prime = plan.measure.t_prime >= 0.0 ? plan.measure.t_prime : 0.5 * t_end;
  const double t_max = plan.measure.t_max >= 0.0 ? plan.measure.t_max : t_end;

  MeasureValues out;
  MeasureReport report;
  report.kind = kind;
  report.window_start = t_prime;
  report.window_end = t_max;

  switch (kind) {
    case MeasureKind::ForagingSuccess: {
      report.value =
          foraging_success(traj, measure_resource(plan), t_prime, t_max, plan.measure.species);
      break;
    }
    case MeasureKind::ModifiedForagingSuccess: {
      double period = plan.measure.period;
      if (period <= 0.0 && outcome.attractor.periodic()) period = outcome.attractor.period;
      if (period <= 0.0) {
        if (!outcome.attractor.steady()) {
          throw ConfigError("modified foraging success needs a period: none detected and "
                            "measure.period not set");
        }
        period = t_end - t_prime;  // steady attractor: any window
      }
      report.period = period;
      report.value =
          modified_foraging_success(traj, measure_resource(plan), period, plan.measure.species);
      report.window_start = t_end - period;
      report.window_end = t_end;
      break;
    }
    case MeasureKind::NetGrowth: {
      const SystemRHS& system = outcome.system;
      auto f = [&system](const SimState& state) {
        const auto reactions = system.reactions(state, nullptr);
        std::vector<double> cells(state.fields[0].values.size(), 0.0);
        for (std::size_t fi = 0; fi < system.n_fields(); ++fi) {
          if (!system.is_population[fi] || fi >= reactions.size() || reactions[fi].empty()) {
            continue;
          }
          for (std::size_t c = 0; c < cells.size(); ++c) cells[c] += reactions[fi][c];
        }
        return cells;
      };
      // delay families evaluate reactions against the recorded history; the
      // snapshot quadrature skips them and reports the exact stream only
      NetGrowthReport rep;
      if (outcome.system.needs_history) {
        if (!(t_prime < t_max) || t_prime < traj.times.front() - 1e-9 ||
            t_max > traj.times.back() + 1e-9) {
          throw ConfigError("measure window lies outside the recorded trajectory");
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < traj.step_times.size(); ++i) {
          if (traj.step_times[i] - traj.dt_history[i] < t_prime - 1e-12) continue;
          if (traj.step_times[i] > t_max + 1e-12) break;
          acc += traj.growth_history[i];
        }
        rep.value = acc;
        rep.step_accumulated = acc;
      } else {
        rep = net_growth(traj, f, t_prime, t_max);
      }
      report.value = rep.value;
      out.net_growth_identity = rep;
      break;
    }
  }
  out.reports.push_back(report);
  return out;
}

int execute_measure(const RunPlan& plan, const std::string& out_dir) {
  const SimulationOutcome outcome = run_plan_simulation(plan);
  Json summary = base_summary(plan);
  summary["simulation"] = simulation_json(plan, outcome);
  if (outcome.trajectory.divergence) {
    summary["outputs"] = {"summary.json"};
    write_summary(out_dir, summary);
    return 3;
  }

  const MeasureValues values = compute_measures(plan, outcome, plan.measure.kind);
  Json measures = Json::array();
  CsvWriter csv({"kind", "value", "window_start", "window_end", "period"});
  for (const MeasureReport& r : values.reports) {
    Json jr;
    jr["kind"] = measure_kind_name(r.kind);
    jr["value"] = r.value;
    jr["window"] = {r.window_start, r.window_end};
    if (r.period > 0.0) jr["period"] = r.period;
    measures.push_back(jr);
    csv.add_row({measure_kind_name(r.kind), CsvWriter::cell(r.value),
                 CsvWriter::cell(r.window_start), CsvWriter::cell(r.window_end),
                 CsvWriter::cell(r.period)});
  }
  summary["measures"] = measures;
  if (values.net_growth_identity) {
    const NetGrowthReport& ng = *values.net_growth_identity;
    summary["net_growth_identity"] = {{"quadrature", ng.value},
                                      {"step_accumulated", ng.step_accumulated},
                                      {"mass_difference", ng.mass_difference}};
  }
  write_text_file(out_dir + "/measures.csv", csv.str());
  summary["outputs"] = {"summary.json", "measures.csv"};
  write_summary(out_dir, summary);
  return 0;
}

int execute_stability(const RunPlan& plan, const std::string& out_dir) {
  Json summary = base_summary(plan);
  CsvWriter csv({"k", "re_lambda", "im_lambda", "unstable"});

  std::vector<double> u_star = plan.stability.u_star;
  if (u_star.empty()) {
    u_star.assign(plan.model.population_count(), 1.0 / plan.grid.length);
  }

  Json stability_json;
  if (const auto* delay = std::get_if<DelayScalar>(&plan.model.family)) {
    const double fprime = delay->growth == DelayScalar::Growth::None ? 0.0 : -delay->r;
    const double level =
        delay->growth == DelayScalar::Growth::None ? u_star.at(0) : delay->carrying;
    std::vector<int> unstable;
    for (int j = 0; j <= plan.stability.j_max; ++j) {
      const double k = (plan.grid.periodic() ? 2.0 * pi : pi) * j / plan.grid.length;
      std::complex<double> lambda;
      if (j == 0) {
        lambda = {fprime, 0.0};
      } else {
        lambda = delay_characteristic_root(delay->d1, delay->gamma, level, fprime, delay->tau, k,
                                           plan.model.kernel)
                     .lambda;
      }
      if (j > 0 && lambda.real() > 0.0) unstable.push_back(j);
      csv.add_row({CsvWriter::cell(k), CsvWriter::cell(lambda.real()),
                   CsvWriter::cell(lambda.imag()),
                   j > 0 && lambda.real() > 0.0 ? "1" : "0"});
    }
    stability_json["u_star"] = {level};
    stability_json["unstable_modes"] = unstable;

    if (plan.stability.threshold_k > 0.0 && !plan.stability.threshold_taus.empty()) {
      Json thresholds = Json::array();
      std::vector<double> gammas;
      for (double tau : plan.stability.threshold_taus) {
        const double g = delay_instability_threshold(delay->d1, level, fprime, tau,
                                                     plan.stability.threshold_k,
                                                     plan.model.kernel);
        gammas.push_back(g);
        thresholds.push_back({{"tau", tau}, {"gamma_star", g}});
      }
      double spread = 0.0;
      for (double g : gammas) spread = std::max(spread, std::abs(g - gammas.front()));
      stability_json["threshold"] = {{"k", plan.stability.threshold_k},
                                     {"entries", thresholds},
                                     {"spread", spread}};
    }
  } else {
    const DispersionResult result = analyze_dispersion(plan.model, plan.grid.length,
                                                       plan.grid.bc.kind, u_star,
                                                       plan.stability.j_max);
    for (std::size_t i = 0; i < result.mode_index.size(); ++i) {
      const bool unstable = std::find(result.unstable.begin(), result.unstable.end(),
                                      result.mode_index[i]) != result.unstable.end();
      csv.add_row({CsvWriter::cell(result.wavenumber[i]),
                   CsvWriter::cell(result.growth[i].real()),
                   CsvWriter::cell(result.growth[i].imag()), unstable ? "1" : "0"});
    }
    stability_json["u_star"] = u_star;
    stability_json["unstable_modes"] = result.unstable;
    stability_json["max_growth"] = result.max_growth();
    stability_json["max_unstable_index"] = result.max_unstable_index();
  }

  write_text_file(out_dir + "/dispersion.csv", csv.str());
  summary["stability"] = stability_json;
  summary["outputs"] = {"summary.json", "dispersion.csv"};
  write_summary(out_dir, summary);
  return 0;
}

int execute_sweep(const RunPlan& plan, const std::string& out_dir) {
  const MeasureKind kind = plan.sweep_measure;
  auto runner = [&plan, kind](const std::vector<double>& params) {
    std::vector<std::string> overrides;
    for (std::size_t a = 0; a < plan.sweep_axes.size(); ++a) {
      overrides.push_back(plan.sweep_axes[a].key + "=" + format_double(params[a]));
    }
    // rebuild the plan from the raw config with the cell's parameter values
    Ini cell_ini = plan.raw;
    for (const std::string& entry : overrides) {
      const std::size_t eq = entry.find('=');
      cell_ini.set_path(entry.substr(0, eq), entry.substr(eq + 1));
    }
    RunPlan cell_plan = parse_config(cell_ini, Subcommand::Measure);
    SimulationOutcome outcome = run_plan_simulation(cell_plan);
    SweepCellResult result;
    if (outcome.trajectory.divergence) {
      result.ok = false;
      result.error = *outcome.trajectory.divergence;
      return result;
    }
    const MeasureValues values = compute_measures(cell_plan, outcome, kind);
    result.ok = true;
    result.measure = values.reports.front().value;
    result.attractor = attractor_kind_name(outcome.attractor.kind);
    result.period = outcome.attractor.period;
    result.mass_drift = outcome.trajectory.max_relative_mass_drift;
    return result;
  };

  SweepTable table = run_sweep(plan.sweep_axes, kind, runner, thread_count_from_env());

  std::vector<std::string> header;
  for (const SweepAxis& axis : table.axes) header.push_back(axis.key);
  header.insert(header.end(),
                {"measure", "attractor", "period", "mass_drift", "interior_max", "status",
                 "error"});
  CsvWriter csv(header);
  std::size_t failures = 0;
  std::size_t maxima = 0;
  for (const SweepCell& cell : table.cells) {
    std::vector<std::string> row;
    for (double p : cell.params) row.push_back(CsvWriter::cell(p));
    row.push_back(CsvWriter::cell(cell.result.measure));
    row.push_back(cell.result.attractor);
    row.push_back(CsvWriter::cell(cell.result.period));
    row.push_back(CsvWriter::cell(cell.result.mass_drift));
    row.push_back(cell.interior_max ? "1" : "0");
    row.push_back(cell.result.ok ? "ok" : "failed");
    row.push_back(cell.result.error);
    csv.add_row(row);
    if (!cell.result.ok) ++failures;
    if (cell.interior_max) ++maxima;
  }
  write_text_file(out_dir + "/sweep.csv", csv.str());

  Json summary = base_summary(plan);
  Json axes = Json::array();
  for (const SweepAxis& axis : table.axes) {
    axes.push_back({{"key", axis.key}, {"values", axis.values}});
  }
  summary["sweep"] = {{"measure", measure_kind_name(kind)},
                      {"axes", axes},
                      {"cells", table.cells.size()},
                      {"failures", failures},
                      {"interior_maxima", maxima}};
  summary["outputs"] = {"summary.json", "sweep.csv"};
  write_summary(out_dir, summary);
  return 0;
}

int execute_oracle(const RunPlan& plan, const std::string& out_dir) {
  const OracleSpec& spec = plan.oracle;
  const Grid lattice = build_grid(spec.length, spec.cells, BoundaryCondition::zero_flux());
  const FokkerPlanckReport report =
      verify_fokker_planck(spec.covariates, spec.betas, spec.sigma, spec.tau_step, lattice,
                           spec.pde_compare, spec.t_final);

  CsvWriter csv({"x", "drift", "predicted_drift", "relative_deviation"});
  for (const FokkerPlanckSample& s : report.samples) {
    csv.add_row({CsvWriter::cell(s.x), CsvWriter::cell(s.drift),
                 CsvWriter::cell(s.predicted_drift), CsvWriter::cell(s.relative_deviation)});
  }
  write_text_file(out_dir + "/oracle.csv", csv.str());

  Json summary = base_summary(plan);
  Json j;
  j["diffusion_1d"] = report.diffusion_1d;              // M2 / (2 tau)
  j["diffusion_2d_convention"] = report.diffusion_2d_convention;  // M2 / (4 tau)
  j["max_relative_deviation"] = report.max_relative_deviation;
  j["samples"] = report.samples.size();
  if (report.pde_compared) j["l1_distance"] = report.l1_distance;
  summary["oracle"] = j;
  summary["outputs"] = {"summary.json", "oracle.csv"};
  write_summary(out_dir, summary);
  return 0;
}

}  // namespace

int execute(const RunPlan& plan, const std::string& out_dir) {
  switch (plan.subcommand) {
    case Subcommand::Simulate: return execute_simulate(plan, out_dir);
    case Subcommand::Measure: return execute_measure(plan, out_dir);
    case Subcommand::Stability: return execute_stability(plan, out_dir);
    case Subcommand::Sweep: return execute_sweep(plan, out_dir);
    case Subcommand::Oracle: return execute_oracle(plan, out_dir);
  }
  throw ConfigError("unknown subcommand");
}

}  // namespace cogmove
