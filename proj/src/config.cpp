#include "cogmove/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <random>

#include "cogmove/output.hpp"

namespace cogmove {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Ini Ini::parse(const std::string& text) {
  Ini ini;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key outside any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (ini.has(section, key)) {
      throw ConfigError("duplicate key '" + section + "." + key + "'");
    }
    ini.set(section, key, value);
  }
  return ini;
}

bool Ini::has(const std::string& section, const std::string& key) const {
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& entry : entries) {
      if (entry.key == key) return true;
    }
  }
  return false;
}

std::string Ini::get(const std::string& section, const std::string& key) const {
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& entry : entries) {
      if (entry.key == key) return entry.value;
    }
  }
  throw ConfigError("missing key '" + section + "." + key + "'");
}

void Ini::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (auto& entry : entries) {
      if (entry.key == key) {
        entry.value = value;
        return;
      }
    }
    entries.push_back({key, value});
    return;
  }
  sections_.push_back({section, {{key, value}}});
}

void Ini::set_path(const std::string& dotted_path, const std::string& value) {
  const std::size_t dot = dotted_path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= dotted_path.size()) {
    throw ConfigError("override path must look like section.key, got '" + dotted_path + "'");
  }
  set(dotted_path.substr(0, dot), dotted_path.substr(dot + 1), value);
}

std::vector<std::string> Ini::keys(const std::string& section) const {
  std::vector<std::string> out;
  for (const auto& [name, entries] : sections_) {
    if (name != section) continue;
    for (const auto& entry : entries) out.push_back(entry.key);
  }
  return out;
}

std::vector<std::string> Ini::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, entries] : sections_) out.push_back(name);
  return out;
}

std::string Ini::canonical() const {
  std::vector<std::string> lines;
  for (const auto& [name, entries] : sections_) {
    for (const auto& entry : entries) {
      lines.push_back(name + "." + entry.key + "=" + entry.value);
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

const char* subcommand_name(Subcommand sub) {
  switch (sub) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Stability: return "stability";
    case Subcommand::Sweep: return "sweep";
    case Subcommand::Measure: return "measure";
    case Subcommand::Oracle: return "oracle";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Typed plan building with echo and consumption tracking

namespace {

class PlanBuilder {
 public:
  explicit PlanBuilder(const Ini& ini) : ini_(ini) {}

  bool has(const std::string& section, const std::string& key) const {
    return ini_.has(section, key);
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    return fetch(section, key, fallback);
  }
  std::string require_string(const std::string& section, const std::string& key) {
    return fetch(section, key, std::nullopt);
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    return to_double(section, key, fetch(section, key, format_double(fallback)));
  }
  double require_double(const std::string& section, const std::string& key) {
    return to_double(section, key, fetch(section, key, std::nullopt));
  }

  int get_int(const std::string& section, const std::string& key, int fallback) {
    const std::string raw = fetch(section, key, std::to_string(fallback));
    try {
      std::size_t used = 0;
      const int v = std::stoi(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + section + "." + key + "': expected an integer, got '" + raw +
                        "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    const std::string raw = fetch(section, key, fallback ? "true" : "false");
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError("key '" + section + "." + key + "': expected true/false, got '" + raw +
                      "'");
  }

  Expression get_expr(const std::string& section, const std::string& key,
                      const std::string& fallback) {
    return parse_expr_checked(section, key, fetch(section, key, fallback));
  }
  Expression require_expr(const std::string& section, const std::string& key) {
    return parse_expr_checked(section, key, fetch(section, key, std::nullopt));
  }

  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::string& fallback) {
    return to_list(section, key, fetch(section, key, fallback));
  }
  std::vector<double> require_list(const std::string& section, const std::string& key) {
    return to_list(section, key, fetch(section, key, std::nullopt));
  }

  // raw consumption for dynamically named keys (sweep axes, initial fields)
  std::string consume_raw(const std::string& section, const std::string& key) {
    consumed_.insert(section + "." + key);
    const std::string value = ini_.get(section, key);
    echo_[section + "." + key] = value;
    return value;
  }

  void finish_strict() const {
    for (const std::string& section : ini_.sections()) {
      for (const std::string& key : ini_.keys(section)) {
        if (!consumed_.count(section + "." + key)) {
          throw ConfigError("unknown key '" + section + "." + key + "'");
        }
      }
    }
  }

  std::map<std::string, std::string> echo() const { return echo_; }
  std::vector<std::string> defaults_applied() const {
    return {defaults_.begin(), defaults_.end()};
  }

  std::vector<double> to_list(const std::string& section, const std::string& key,
                              const std::string& raw) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
      std::size_t comma = raw.find(',', pos);
      if (comma == std::string::npos) comma = raw.size();
      const std::string item = trim(raw.substr(pos, comma - pos));
      if (!item.empty()) out.push_back(to_double(section, key, item));
      pos = comma + 1;
    }
    if (out.empty()) {
      throw ConfigError("key '" + section + "." + key + "': expected a list of numbers");
    }
    return out;
  }

 private:
  std::string fetch(const std::string& section, const std::string& key,
                    std::optional<std::string> fallback) {
    const std::string path = section + "." + key;
    consumed_.insert(path);
    if (ini_.has(section, key)) {
      const std::string value = ini_.get(section, key);
      echo_[path] = value;
      return value;
    }
    if (!fallback) throw ConfigError("missing required key '" + path + "'");
    echo_[path] = *fallback;
    defaults_.insert(path);
    return *fallback;
  }

  double to_double(const std::string& section, const std::string& key, const std::string& raw) {
    const char* begin = raw.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || trim(std::string(end)) != "") {
      // allow full expressions for scalar keys that are numbers in disguise
      try {
        Expression e = parse_expression(raw);
        if (!e.depends_on_t()) return e.eval(0.0, 0.0);
      } catch (const ConfigError&) {
      }
      throw ConfigError("key '" + section + "." + key + "': expected a number, got '" + raw +
                        "'");
    }
    return v;
  }

  Expression parse_expr_checked(const std::string& section, const std::string& key,
                                const std::string& raw) {
    try {
      return parse_expression(raw);
    } catch (const ExpressionError& err) {
      throw ConfigError("key '" + section + "." + key + "': " + err.what());
    }
  }

  const Ini& ini_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> echo_;
  std::set<std::string> defaults_;
};

Matrix read_matrix(PlanBuilder& b, const std::string& section, const std::string& prefix,
                   std::size_t n, const std::string& fallback_row) {
  Matrix m;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string key = prefix + "_" + std::to_string(i);
    std::vector<double> row = b.get_list(section, key, fallback_row);
    if (row.size() != n) {
      throw ConfigError("key '" + section + "." + key + "': expected " + std::to_string(n) +
                        " entries");
    }
    m.push_back(std::move(row));
  }
  return m;
}

std::string zero_row(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += i + 1 < n ? "0, " : "0";
  return s;
}

KernelSpec build_kernel(PlanBuilder& b) {
  KernelSpec spec;
  const std::string shape = b.get_string("kernel", "shape", "delta");
  spec.shape = kernel_shape_from_name(shape);
  spec.radius = b.get_double("kernel", "radius", 0.0);
  const std::string mode = b.get_string("kernel", "boundary_mode", "cutoff");
  if (mode == "cutoff") {
    spec.boundary_mode = KernelBoundaryMode::CutOff;
  } else if (mode == "cutoff_renormalized") {
    spec.boundary_mode = KernelBoundaryMode::CutOffRenormalized;
  } else {
    throw ConfigError("kernel.boundary_mode must be cutoff or cutoff_renormalized");
  }
  validate_kernel(spec);
  return spec;
}

TemporalKernelSpec build_temporal(PlanBuilder& b, const std::string& kind_key,
                                  const std::string& tau_key, const std::string& kind_fallback) {
  const std::string kind = b.get_string("delay", kind_key, kind_fallback);
  if (kind == "none") return TemporalKernelSpec::none();
  const double tau = b.get_double("delay", tau_key, 1.0);
  if (kind == "weak") return TemporalKernelSpec::weak(tau);
  if (kind == "strong") return TemporalKernelSpec::strong(tau);
  if (kind == "discrete") return TemporalKernelSpec::discrete(tau);
  throw ConfigError("delay." + kind_key + " must be none, weak, strong or discrete");
}

ModelSpec build_model(PlanBuilder& b) {
  ModelSpec spec;
  spec.kernel = build_kernel(b);
  const std::string family = b.require_string("model", "family");

  if (family == "perception_foraging") {
    PerceptionForaging m;
    m.d = b.get_double("model", "d", 1.0);
    m.gamma = b.get_double("model", "gamma", 1.0);
    m.resource = b.require_expr("model", "resource");
    spec.family = m;
  } else if (family == "den_site" || family == "given_map" || family == "avg_density" ||
             family == "per_capita") {
    StaticMapModel m;
    m.d = b.get_double("model", "d", 1.0);
    m.gamma = b.get_double("model", "gamma", 1.0);
    if (family == "den_site") {
      m.kind = StaticMapModel::Kind::DenSite;
      m.den_x0 = b.require_double("model", "x0");
    } else {
      m.kind = family == "given_map" ? StaticMapModel::Kind::GivenMap
               : family == "avg_density" ? StaticMapModel::Kind::AvgDensity
                                         : StaticMapModel::Kind::PerCapita;
      m.map = b.require_expr("model", family == "given_map" ? "map" : "resource");
    }
    spec.family = m;
  } else if (family == "aggregation") {
    Aggregation m;
    m.d = b.get_double("model", "d", 1.0);
    m.gamma = b.get_double("model", "gamma", 0.0);
    spec.family = m;
  } else if (family == "multi_aggregation") {
    MultiAggregation m;
    m.d = b.require_list("model", "d");
    m.gamma = read_matrix(b, "model", "gamma", m.d.size(), zero_row(m.d.size()));
    spec.family = m;
  } else if (family == "marks") {
    Marks m;
    m.d = b.require_list("model", "d");
    m.gamma = b.require_list("model", "gamma");
    m.alpha = read_matrix(b, "model", "alpha", m.d.size(), zero_row(m.d.size()));
    m.mu = b.get_double("model", "mu", 1.0);
    spec.family = m;
  } else if (family == "conflict_zones") {
    ConflictZones m;
    m.d = b.require_list("model", "d");
    m.gamma = b.require_list("model", "gamma");
    m.rho = read_matrix(b, "model", "rho", m.d.size(), zero_row(m.d.size()));
    m.mu = b.get_double("model", "mu", 1.0);
    m.beta = b.get_double("model", "beta", 0.0);
    const std::string variant = b.get_string("model", "variant", "magnitude");
    if (variant == "magnitude") {
      m.variant = ConflictZones::Variant::Magnitude;
    } else if (variant == "probability") {
      m.variant = ConflictZones::Variant::Probability;
    } else {
      throw ConfigError("model.variant must be magnitude or probability");
    }
    m.smear = b.get_double("model", "smear", 0.0);
    m.nonlocal_conflict = b.get_bool("model", "nonlocal_conflict", false);
    spec.family = m;
  } else if (family == "consumer_resource") {
    ConsumerResource m;
    m.D1 = b.get_double("model", "d1", 1.0);
    m.D2 = b.get_double("model", "d2", 1.0);
    m.gamma = b.get_double("model", "gamma", 0.0);
    m.r = b.get_double("model", "r", 1.0);
    m.K = b.get_double("model", "K", 1.0);
    m.beta = b.get_double("model", "beta", 1.0);
    m.alpha = b.get_double("model", "alpha", 1.0);
    m.c = b.get_double("model", "c", 1.0);
    m.d = b.get_double("model", "death", 1.0);
    const std::string map = b.get_string("model", "map", "none");
    if (map == "none") {
      m.map = ConsumerResource::MapKind::None;
    } else if (map == "linear") {
      m.map = ConsumerResource::MapKind::LinearQ;
    } else if (map == "bilinear") {
      m.map = ConsumerResource::MapKind::BilinearQ;
    } else {
      throw ConfigError("model.map must be none, linear or bilinear");
    }
    if (m.map != ConsumerResource::MapKind::None) {
      m.b = b.get_double("model", "b", 1.0);
      m.mu = b.get_double("model", "mu", 1.0);
      m.xi = b.get_double("model", "xi", 0.0);
    }
    spec.family = m;
  } else if (family == "delay_scalar") {
    DelayScalar m;
    m.d1 = b.get_double("model", "d1", 1.0);
    m.gamma = b.get_double("model", "gamma", 0.0);
    m.tau = b.require_double("model", "tau");
    const std::string growth = b.get_string("model", "growth", "none");
    if (growth == "none") m.growth = DelayScalar::Growth::None;
    else if (growth == "logistic") m.growth = DelayScalar::Growth::Logistic;
    else if (growth == "spatial_average") m.growth = DelayScalar::Growth::SpatialAverage;
    else if (growth == "temporal_delay") m.growth = DelayScalar::Growth::TemporalDelay;
    else if (growth == "kernel_average") m.growth = DelayScalar::Growth::KernelAverageDelayed;
    else {
      throw ConfigError("model.growth must be none, logistic, spatial_average, temporal_delay "
                        "or kernel_average");
    }
    if (m.growth != DelayScalar::Growth::None) {
      m.r = b.get_double("model", "r", 1.0);
      m.carrying = b.get_double("model", "K", 1.0);
    }
    if (m.growth == DelayScalar::Growth::TemporalDelay ||
        m.growth == DelayScalar::Growth::KernelAverageDelayed) {
      m.sigma = b.get_double("model", "sigma", 0.0);
    }
    spec.family = m;
  } else if (family == "delay_consumer_resource") {
    DelayConsumerResource m;
    m.d22 = b.get_double("model", "d22", 1.0);
    m.d11 = b.get_double("model", "d11", 1.0);
    m.d21 = b.get_double("model", "d21", 0.0);
    m.tau = b.require_double("model", "tau");
    m.r = b.get_double("model", "r", 1.0);
    m.K = b.get_double("model", "K", 1.0);
    m.beta = b.get_double("model", "beta", 1.0);
    m.alpha = b.get_double("model", "alpha", 1.0);
    m.c = b.get_double("model", "c", 1.0);
    m.d = b.get_double("model", "death", 1.0);
    spec.family = m;
  } else if (family == "delay_competition") {
    DelayCompetition m;
    m.D1 = b.get_double("model", "d1", 1.0);
    m.D2 = b.get_double("model", "d2", 1.0);
    m.D11 = b.get_double("model", "d11", 0.0);
    m.D12 = b.get_double("model", "d12", 0.0);
    m.D21 = b.get_double("model", "d21", 0.0);
    m.D22 = b.get_double("model", "d22", 0.0);
    m.tau = b.require_double("model", "tau");
    m.alpha = b.get_double("model", "alpha", 0.5);
    m.beta = b.get_double("model", "beta", 0.5);
    m.gamma = b.get_double("model", "gamma", 1.0);
    spec.family = m;
  } else if (family == "distributed") {
    Distributed m;
    m.d1 = b.get_double("model", "d1", 1.0);
    m.gamma = b.get_double("model", "gamma", 0.0);
    m.d3 = b.get_double("model", "d3", m.d1);
    m.temporal = build_temporal(b, "kind", "tau", "weak");
    const std::string path = b.get_string("delay", "path", "augmented");
    if (path == "augmented") m.path = Distributed::Path::Augmented;
    else if (path == "quadrature") m.path = Distributed::Path::Quadrature;
    else throw ConfigError("delay.path must be augmented or quadrature");
    m.maturation = build_temporal(b, "maturation_kind", "maturation_tau", "none");
    m.logistic_growth = b.get_bool("model", "logistic_growth", false);
    if (m.logistic_growth || m.maturation.kind != TemporalKind::None) {
      m.r = b.get_double("model", "r", 1.0);
      m.carrying = b.get_double("model", "K", 1.0);
    }
    spec.family = m;
  } else if (family == "short_long") {
    ShortLong m;
    m.d = b.get_double("model", "d", 1.0);
    m.alpha_s = b.get_double("model", "alpha_s", 1.0);
    m.alpha_l = b.get_double("model", "alpha_l", 0.1);
    m.beta_s = b.get_double("model", "beta_s", 1.0);
    m.beta_l = b.get_double("model", "beta_l", 0.1);
    m.c1 = b.get_double("model", "c1", 1.0);
    m.c2 = b.get_double("model", "c2", 1.0);
    m.a_s = b.require_expr("model", "a_s");
    m.a_l = b.require_expr("model", "a_l");
    spec.family = m;
  } else if (family == "starvation_den_site") {
    StarvationDenSite m;
    m.d = b.get_double("model", "d", 1.0);
    m.gamma = b.require_double("model", "gamma");
    m.gamma_plus = b.require_double("model", "gamma_plus");
    m.den_x0 = b.require_double("model", "x0");
    m.resource = b.require_expr("model", "resource");
    const std::string kind = b.get_string("model", "satisfaction", "supply_demand");
    if (kind == "supply_demand") m.satisfaction.kind = SatisfactionKind::SupplyDemand;
    else if (kind == "relative_average") m.satisfaction.kind = SatisfactionKind::RelativeAverage;
    else throw ConfigError("model.satisfaction must be supply_demand or relative_average");
    const std::string response = b.get_string("model", "response", "step");
    if (response == "step") m.satisfaction.response = ResponseKind::Step;
    else if (response == "smooth") m.satisfaction.response = ResponseKind::Smooth;
    else throw ConfigError("model.response must be step or smooth");
    m.satisfaction.sharpness = b.get_double("model", "sharpness", 20.0);
    m.satisfaction.d_plus = m.gamma_plus;
    spec.family = m;
  } else {
    throw ConfigError("unknown model family '" + family + "'");
  }
  return spec;
}

Grid build_grid_section(PlanBuilder& b) {
  const double length = b.get_double("grid", "length", 1.0);
  const int cells = b.get_int("grid", "cells", 128);
  const std::string bc = b.get_string("grid", "bc", "zero_flux");
  BoundaryCondition boundary;
  if (bc == "zero_flux") boundary = BoundaryCondition::zero_flux();
  else if (bc == "neumann") boundary = BoundaryCondition::neumann();
  else if (bc == "dirichlet") boundary = BoundaryCondition::dirichlet();
  else if (bc == "periodic") boundary = BoundaryCondition::periodic();
  else if (bc == "robin") {
    boundary = BoundaryCondition::robin(b.get_double("grid", "robin_alpha", 1.0),
                                        b.get_double("grid", "robin_beta", 0.0));
  } else {
    throw ConfigError("grid.bc must be zero_flux, neumann, dirichlet, periodic or robin");
  }
  return build_grid(length, cells, boundary);
}

StepConfig build_stepping(PlanBuilder& b, bool has_reactions) {
  StepConfig cfg;
  cfg.dt = b.get_double("stepping", "dt", 0.0);
  cfg.cfl = b.get_double("stepping", "cfl", 0.4);
  cfg.t_end = b.get_double("stepping", "t_end", 1.0);
  cfg.snapshot_every = b.get_double("stepping", "snapshot_every", cfg.t_end / 20.0);
  cfg.dt_max = b.get_double("stepping", "dt_max", 0.05);
  const std::string advection = b.get_string("stepping", "advection", "upwind");
  if (advection == "upwind") cfg.advection = AdvectionScheme::Upwind;
  else if (advection == "central") cfg.advection = AdvectionScheme::Central;
  else throw ConfigError("stepping.advection must be upwind or central");
  cfg.mass_drift_tol = b.get_double("stepping", "mass_drift_tol", 1e-8);
  cfg.linear_tol = b.get_double("stepping", "linear_tol", 1e-12);
  cfg.normalize_initial = b.get_bool("initial", "normalize", !has_reactions);
  if (!(cfg.t_end > 0.0)) throw ConfigError("stepping.t_end must be positive");
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw ConfigError("stepping.cfl must be in (0, 1]");
  if (!(cfg.snapshot_every > 0.0)) throw ConfigError("stepping.snapshot_every must be positive");
  return cfg;
}

std::vector<std::string> model_field_names(const ModelSpec& spec, const Grid& grid) {
  return compile_model(spec, grid).field_names;
}

InitialSpec build_initial(PlanBuilder& b, const ModelSpec& model, const Grid& grid) {
  InitialSpec init;
  init.noise_amplitude = b.get_double("initial", "noise_amplitude", 0.0);
  init.seed = static_cast<std::uint64_t>(b.get_int("initial", "seed", 0));
  init.mode_index = b.get_int("initial", "mode_index", 0);
  init.mode_amplitude = b.get_double("initial", "mode_amplitude", 0.0);
  // normalize is consumed by build_stepping

  const std::vector<std::string> names = model_field_names(model, grid);
  for (const std::string& name : names) {
    if (b.has("initial", name)) {
      init.field_exprs[name] = parse_expression(b.consume_raw("initial", name));
    }
  }
  return init;
}

MeasureSpec build_measure(PlanBuilder& b, const ModelSpec& model) {
  MeasureSpec spec;
  spec.kind = measure_kind_from_name(b.get_string("measure", "kind", "foraging_success"));
  spec.t_prime = b.get_double("measure", "t_prime", -1.0);
  spec.t_max = b.get_double("measure", "t_max", -1.0);
  spec.period = b.get_double("measure", "period", 0.0);
  spec.species = static_cast<std::size_t>(b.get_int("measure", "species", 0));
  if (b.has("measure", "resource")) {
    spec.resource = parse_expression(b.consume_raw("measure", "resource"));
  } else {
    // fall back to the model's own resource where the family carries one
    if (const auto* pf = std::get_if<PerceptionForaging>(&model.family)) {
      spec.resource = pf->resource;
    } else if (const auto* sm = std::get_if<StaticMapModel>(&model.family);
               sm != nullptr && sm->kind != StaticMapModel::Kind::DenSite) {
      spec.resource = sm->map;
    } else if (const auto* sda = std::get_if<StarvationDenSite>(&model.family)) {
      spec.resource = sda->resource;
    }
  }
  return spec;
}

StabilitySpec build_stability(PlanBuilder& b) {
  StabilitySpec spec;
  spec.j_max = b.get_int("stability", "j_max", 32);
  if (b.has("stability", "u_star")) {
    spec.u_star = b.to_list("stability", "u_star", b.consume_raw("stability", "u_star"));
  }
  spec.threshold_k = b.get_double("stability", "threshold_k", 0.0);
  if (b.has("stability", "threshold_taus")) {
    spec.threshold_taus =
        b.to_list("stability", "threshold_taus", b.consume_raw("stability", "threshold_taus"));
  }
  return spec;
}

OracleSpec build_oracle(PlanBuilder& b) {
  OracleSpec spec;
  for (int i = 1; i <= 9; ++i) {
    const std::string a_key = "a_" + std::to_string(i);
    if (!b.has("oracle", a_key)) break;
    spec.covariates.push_back(parse_expression(b.consume_raw("oracle", a_key)));
    spec.betas.push_back(b.require_double("oracle", "beta_" + std::to_string(i)));
  }
  if (spec.covariates.empty()) {
    throw ConfigError("the oracle needs at least one covariate: set oracle.a_1 and oracle.beta_1");
  }
  spec.sigma = b.get_double("oracle", "sigma", 0.1);
  spec.tau_step = b.get_double("oracle", "tau_step", 0.01);
  spec.length = b.get_double("oracle", "length", 10.0);
  spec.cells = b.get_int("oracle", "cells", 500);
  spec.pde_compare = b.get_bool("oracle", "pde_compare", true);
  spec.t_final = b.get_double("oracle", "t_final", 1.0);
  return spec;
}

}  // namespace

RunPlan parse_config(const std::string& text, Subcommand sub,
                     const std::vector<std::string>& overrides) {
  Ini ini = Ini::parse(text);
  for (const std::string& entry : overrides) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override must look like section.key=value, got '" + entry + "'");
    }
    ini.set_path(trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
  }
  return parse_config(ini, sub);
}

RunPlan parse_config(const Ini& ini, Subcommand sub) {
  RunPlan plan;
  plan.subcommand = sub;
  plan.raw = ini;

  PlanBuilder b(ini);

  if (sub == Subcommand::Oracle) {
    plan.oracle = build_oracle(b);
    plan.write_trajectory = b.get_bool("output", "write_trajectory", true);
    b.finish_strict();
    plan.echo = b.echo();
    plan.defaults_applied = b.defaults_applied();
    plan.config_hash = fnv1a_hash(ini.canonical());
    return plan;
  }

  plan.grid = build_grid_section(b);
  plan.model = build_model(b);
  plan.warnings = validate_model(plan.model, plan.grid);
  plan.stepping = build_stepping(b, plan.model.has_reactions());
  plan.initial = build_initial(b, plan.model, plan.grid);
  plan.initial.normalize = plan.stepping.normalize_initial;
  plan.measure = build_measure(b, plan.model);
  plan.stability = build_stability(b);

  if (sub == Subcommand::Sweep || ini.has("sweep", "measure") || !ini.keys("sweep").empty()) {
    if (b.has("sweep", "measure")) {
      plan.sweep_measure = measure_kind_from_name(b.require_string("sweep", "measure"));
    } else {
      plan.sweep_measure = plan.measure.kind;
    }
    for (const std::string& key : ini.keys("sweep")) {
      if (key == "measure") continue;
      const std::string values = b.consume_raw("sweep", key);
      SweepAxis axis;
      axis.key = key;
      axis.values = b.to_list("sweep", key, values);
      plan.sweep_axes.push_back(std::move(axis));
    }
    if (sub == Subcommand::Sweep && plan.sweep_axes.empty()) {
      throw ConfigError("sweep needs at least one axis: add '<section>.<key> = v1, v2, ...' "
                        "under [sweep]");
    }
  }

  plan.write_trajectory = b.get_bool("output", "write_trajectory", true);
  b.finish_strict();
  plan.echo = b.echo();
  plan.defaults_applied = b.defaults_applied();
  plan.config_hash = fnv1a_hash(ini.canonical());
  return plan;
}

std::vector<Field> build_initial_fields(const RunPlan& plan, const SystemRHS& system) {
  const Grid& grid = plan.grid;
  const std::size_t n_pop = plan.model.population_count();

  std::vector<Field> populations;
  for (std::size_t p = 0; p < n_pop; ++p) {
    const std::string& name = system.field_names[p];
    Field f = make_field(grid, 1.0);
    if (auto it = plan.initial.field_exprs.find(name); it != plan.initial.field_exprs.end()) {
      for (int i = 0; i < grid.n_cells; ++i) f.values[i] = it->second.eval(grid.center(i), 0.0);
    }
    populations.push_back(std::move(f));
  }

  // deterministic seeded perturbations, applied before any normalization
  if (plan.initial.noise_amplitude > 0.0) {
    for (std::size_t p = 0; p < n_pop; ++p) {
      std::mt19937_64 rng(plan.initial.seed + 0x9e3779b97f4a7c15ull * (p + 1));
      for (double& v : populations[p].values) {
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        v += plan.initial.noise_amplitude * (2.0 * unit - 1.0);
      }
    }
  }
  if (plan.initial.mode_index > 0 && plan.initial.mode_amplitude != 0.0) {
    const double k = grid.periodic() ? 2.0 * pi * plan.initial.mode_index / grid.length
                                     : pi * plan.initial.mode_index / grid.length;
    for (std::size_t p = 0; p < n_pop; ++p) {
      for (int i = 0; i < grid.n_cells; ++i) {
        populations[p].values[i] += plan.initial.mode_amplitude * std::cos(k * grid.center(i));
      }
    }
  }

  std::vector<Field> fields = expand_initial_fields(plan.model, system, populations);

  // explicit expressions for auxiliary fields override the defaults
  for (std::size_t f = n_pop; f < system.n_fields(); ++f) {
    const std::string& name = system.field_names[f];
    if (auto it = plan.initial.field_exprs.find(name); it != plan.initial.field_exprs.end()) {
      for (int i = 0; i < grid.n_cells; ++i) {
        fields[f].values[i] = it->second.eval(grid.center(i), 0.0);
      }
    }
  }
  return fields;
}

}  // namespace cogmove
