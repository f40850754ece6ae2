#include "cogmove/models.hpp"

#include <algorithm>
#include <cmath>

namespace cogmove {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

std::vector<double> scaled_face_gradient(const Field& potential, double rate) {
  std::vector<double> v = potential_face_gradient(potential);
  for (double& x : v) x *= rate;
  return v;
}

void add_scaled_face_gradient(std::vector<double>& acc, const Field& potential, double rate) {
  const std::vector<double> g = potential_face_gradient(potential);
  if (acc.empty()) acc.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) acc[i] += rate * g[i];
}

Field evaluate_on_grid(const Expression& expr, const Grid& grid, double t) {
  Field f = make_field(grid);
  for (int i = 0; i < grid.n_cells; ++i) f.values[i] = expr.eval(grid.center(i), t);
  return f;
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelSpec queries

std::string ModelSpec::family_name() const {
  return std::visit(
      Overloaded{
          [](const PerceptionForaging&) { return std::string("perception_foraging"); },
          [](const StaticMapModel& m) {
            switch (m.kind) {
              case StaticMapModel::Kind::DenSite: return std::string("den_site");
              case StaticMapModel::Kind::GivenMap: return std::string("given_map");
              case StaticMapModel::Kind::AvgDensity: return std::string("avg_density");
              case StaticMapModel::Kind::PerCapita: return std::string("per_capita");
            }
            return std::string("static_map");
          },
          [](const Aggregation&) { return std::string("aggregation"); },
          [](const MultiAggregation&) { return std::string("multi_aggregation"); },
          [](const Marks&) { return std::string("marks"); },
          [](const ConflictZones&) { return std::string("conflict_zones"); },
          [](const ConsumerResource&) { return std::string("consumer_resource"); },
          [](const DelayScalar&) { return std::string("delay_scalar"); },
          [](const DelayConsumerResource&) { return std::string("delay_consumer_resource"); },
          [](const DelayCompetition&) { return std::string("delay_competition"); },
          [](const Distributed&) { return std::string("distributed"); },
          [](const ShortLong&) { return std::string("short_long"); },
          [](const StarvationDenSite&) { return std::string("starvation_den_site"); }},
      family);
}

std::size_t ModelSpec::population_count() const {
  return std::visit(Overloaded{[](const MultiAggregation& m) { return m.d.size(); },
                               [](const Marks& m) { return m.d.size(); },
                               [](const ConflictZones& m) { return m.d.size(); },
                               [](const ConsumerResource&) { return std::size_t{2}; },
                               [](const DelayConsumerResource&) { return std::size_t{2}; },
                               [](const DelayCompetition&) { return std::size_t{2}; },
                               [](const auto&) { return std::size_t{1}; }},
                    family);
}

bool ModelSpec::uses_history() const {
  return std::visit(
      Overloaded{[](const DelayScalar&) { return true; },
                 [](const DelayConsumerResource&) { return true; },
                 [](const DelayCompetition&) { return true; },
                 [](const Distributed& m) { return m.path == Distributed::Path::Quadrature; },
                 [](const auto&) { return false; }},
      family);
}

bool ModelSpec::has_reactions() const {
  return std::visit(
      Overloaded{[](const ConsumerResource&) { return true; },
                 [](const DelayScalar& m) { return m.growth != DelayScalar::Growth::None; },
                 [](const DelayConsumerResource&) { return true; },
                 [](const DelayCompetition&) { return true; },
                 [](const Distributed& m) {
                   return m.logistic_growth || m.maturation.kind != TemporalKind::None;
                 },
                 [](const auto&) { return false; }},
      family);
}

// ---------------------------------------------------------------------------
// Building blocks

Field static_potential(StaticMapModel::Kind kind, const Field* m, double x0, double gamma,
                       const Field* u, const Grid& grid) {
  switch (kind) {
    case StaticMapModel::Kind::DenSite: {
      require(x0 >= 0.0 && x0 <= grid.length, "den site must lie inside the habitat [0, L]");
      Field f = make_field(grid);
      for (int i = 0; i < grid.n_cells; ++i) f.values[i] = gamma * std::abs(grid.center(i) - x0);
      return f;
    }
    case StaticMapModel::Kind::GivenMap:
      require(m != nullptr, "given-map potential needs the map field");
      return *m;
    case StaticMapModel::Kind::AvgDensity: {
      require(m != nullptr, "average-density potential needs the resource field");
      const double mbar = total_mass(*m) / grid.length;
      require(mbar != 0.0, "degenerate landscape: the resource has zero average");
      Field f = *m;
      for (double& v : f.values) v /= mbar;
      return f;
    }
    case StaticMapModel::Kind::PerCapita: {
      require(m != nullptr && u != nullptr, "per-capita potential needs the resource and density");
      Field f = *m;
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        f.values[i] /= std::max(u->values[i], density_floor);
      }
      return f;
    }
  }
  throw ConfigError("unknown static map kind");
}

std::vector<std::vector<double>> aggregation_velocity(const std::vector<Field>& u,
                                                      const Matrix& gamma,
                                                      const KernelSpec& kernel) {
  const std::size_t n = u.size();
  require(gamma.size() == n, "aggregation rate matrix must be square with the species count");
  std::vector<Field> perceived;
  perceived.reserve(n);
  for (const Field& f : u) perceived.push_back(perceive(f, kernel));
  std::vector<std::vector<double>> vel(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(gamma[i].size() == n, "aggregation rate matrix must be square");
    for (std::size_t j = 0; j < n; ++j) {
      add_scaled_face_gradient(vel[i], perceived[j], gamma[i][j]);
    }
  }
  return vel;
}

Field marks_rhs(const Field& p_i, const std::vector<Field>& u, const std::vector<double>& alpha_row,
                double mu, std::size_t self_index) {
  Field out = make_field(p_i.grid);
  for (std::size_t c = 0; c < out.values.size(); ++c) {
    double growth = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (j == self_index && alpha_row[j] == 0.0) continue;
      growth += alpha_row[j] * u[j].values[c];
    }
    out.values[c] = growth - mu * p_i.values[c];
  }
  return out;
}

Field conflict_map_rhs(const Field& k_i, const std::vector<Field>& u, const Matrix& rho,
                       double mu, double beta, ConflictZones::Variant variant,
                       std::size_t self_index, bool nonlocal, const KernelSpec& kernel) {
  const Field lead = nonlocal ? perceive(u[self_index], kernel) : u[self_index];
  Field out = make_field(k_i.grid);
  for (std::size_t c = 0; c < out.values.size(); ++c) {
    double encounters = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (j == self_index) continue;
      encounters += rho[self_index][j] * u[j].values[c];
    }
    const double growth = lead.values[c] * encounters;
    const double decay = (mu + beta * u[self_index].values[c]) * k_i.values[c];
    if (variant == ConflictZones::Variant::Magnitude) {
      out.values[c] = growth - decay;
    } else {
      out.values[c] = growth * (1.0 - k_i.values[c]) - decay;
    }
  }
  return out;
}

ConsumerResourceRhs consumer_resource_rhs(const Field& u, const Field& v, const Field* q,
                                          const ConsumerResource& p) {
  ConsumerResourceRhs out;
  out.du = make_field(u.grid);
  out.dv = make_field(u.grid);
  if (p.map != ConsumerResource::MapKind::None) out.dq = make_field(u.grid);
  for (std::size_t c = 0; c < u.values.size(); ++c) {
    const double uc = u.values[c];
    const double vc = v.values[c];
    const double denom = std::max(p.alpha + vc, 1e-300);
    const double predation = p.beta * uc * vc / denom;
    out.du.values[c] = p.c * predation - p.d * uc;
    out.dv.values[c] = p.r * vc * (1.0 - vc / p.K) - predation;
    if (p.map == ConsumerResource::MapKind::LinearQ) {
      out.dq->values[c] = p.b * vc - p.mu * q->values[c];
    } else if (p.map == ConsumerResource::MapKind::BilinearQ) {
      out.dq->values[c] = p.b * uc * vc - (p.mu + p.xi * uc) * q->values[c];
    }
  }
  return out;
}

std::pair<double, double> lotka_volterra_competition(double u, double v, double alpha, double beta,
                                                     double gamma) {
  return {u * (1.0 - u - alpha * v), gamma * v * (1.0 - beta * u - v)};
}

std::pair<Field, Field> short_long_rhs(const Field& m_s, const Field& m_l, const Field& a_s,
                                       const Field& a_l, double alpha_s, double alpha_l,
                                       double beta_s, double beta_l) {
  Field ds = make_field(m_s.grid);
  Field dl = make_field(m_l.grid);
  for (std::size_t c = 0; c < ds.values.size(); ++c) {
    ds.values[c] = alpha_s * a_s.values[c] - beta_s * m_s.values[c];
    dl.values[c] = alpha_l * a_l.values[c] - beta_l * m_l.values[c];
  }
  return {std::move(ds), std::move(dl)};
}

Field short_long_combined_map(const Field& m_s, const Field& m_l, double c1, double c2) {
  Field out = make_field(m_s.grid);
  for (std::size_t c = 0; c < out.values.size(); ++c) {
    out.values[c] = c1 * m_s.values[c] + c2 * m_l.values[c];
  }
  return out;
}

Field satisfaction(const SatisfactionSpec& spec, const Field& m, const Field& u) {
  Field s = make_field(m.grid);
  if (spec.kind == SatisfactionKind::SupplyDemand) {
    for (std::size_t c = 0; c < s.values.size(); ++c) {
      s.values[c] = m.values[c] / std::max(u.values[c], density_floor);
    }
  } else {
    const double mbar = total_mass(m) / m.grid.length;
    require(mbar != 0.0, "degenerate landscape: the resource has zero average");
    for (std::size_t c = 0; c < s.values.size(); ++c) s.values[c] = m.values[c] / mbar;
  }
  return s;
}

Field starvation_rate(const Field& s, double gamma_plus, ResponseKind response, double sharpness) {
  Field rate = make_field(s.grid);
  if (response == ResponseKind::Step) {
    for (std::size_t c = 0; c < rate.values.size(); ++c) {
      rate.values[c] = s.values[c] < 1.0 ? gamma_plus : 0.0;
    }
  } else {
    for (std::size_t c = 0; c < rate.values.size(); ++c) {
      rate.values[c] = gamma_plus / (1.0 + std::exp(-sharpness * (1.0 - s.values[c])));
    }
  }
  return rate;
}

std::vector<double> sda_den_site_velocity(const Field& u, const Field& m, double x0, double gamma,
                                          double gamma_plus, const SatisfactionSpec& spec,
                                          const Grid& grid) {
  require(gamma > 0.0 && gamma < gamma_plus,
          "starvation-driven advection requires 0 < gamma < gamma_plus");
  require(x0 >= 0.0 && x0 <= grid.length, "den site must lie inside the habitat [0, L]");
  const Field s = satisfaction(spec, m, u);
  const Field rate = starvation_rate(s, gamma_plus, spec.response, spec.sharpness);
  const std::vector<double> grad_m = potential_face_gradient(m);
  Field den = make_field(grid);
  for (int i = 0; i < grid.n_cells; ++i) den.values[i] = std::abs(grid.center(i) - x0);
  const std::vector<double> grad_den = potential_face_gradient(den);

  const int n = grid.n_cells;
  std::vector<double> vel(static_cast<std::size_t>(n) + 1, 0.0);
  for (int f = 0; f <= n; ++f) {
    double rate_face;
    if (f == 0) rate_face = rate.values[0];
    else if (f == n) rate_face = rate.values[n - 1];
    else rate_face = 0.5 * (rate.values[f - 1] + rate.values[f]);
    vel[f] = rate_face * grad_m[f] - gamma * grad_den[f];
  }
  return vel;
}

Field delay_potential(const HistoryBuffer& buf, double tau, std::size_t species) {
  require(tau >= 0.0, "delay must be nonnegative");
  return buf.sample(species, buf.now() - tau);
}

Field nonlocal_reaction(const Field& u, const HistoryBuffer* buf, double t_now,
                        NonlocalReactionKind kind, double sigma, const Matrix* K_table,
                        std::size_t species) {
  const Grid& grid = u.grid;
  switch (kind) {
    case NonlocalReactionKind::SpatialAverage: {
      return make_field(grid, total_mass(u) / grid.length);
    }
    case NonlocalReactionKind::TemporalDelay: {
      require(buf != nullptr, "temporal-delay reaction needs a history buffer");
      return buf->sample(species, t_now - sigma);
    }
    case NonlocalReactionKind::KernelAverageDelayed: {
      Field delayed = buf != nullptr ? buf->sample(species, t_now - sigma) : u;
      if (K_table == nullptr) {
        // K = 1/L recovers the spatial average of the delayed field
        return make_field(grid, total_mass(delayed) / grid.length);
      }
      Field out = make_field(grid);
      for (int i = 0; i < grid.n_cells; ++i) {
        double sum = 0.0;
        for (int j = 0; j < grid.n_cells; ++j) {
          sum += (*K_table)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                 delayed.values[static_cast<std::size_t>(j)];
        }
        out.values[static_cast<std::size_t>(i)] = sum * grid.dx;
      }
      return out;
    }
  }
  throw ConfigError("unknown nonlocal reaction kind");
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_matrix_square(const Matrix& m, std::size_t n, const std::string& name) {
  require(m.size() == n, name + " must have one row per species");
  for (const auto& row : m) require(row.size() == n, name + " must be square");
}

}  // namespace

std::vector<std::string> validate_model(const ModelSpec& spec, const Grid& grid) {
  std::vector<std::string> warnings;
  validate_kernel(spec.kernel);
  if (!spec.kernel.is_delta()) {
    require(spec.kernel.radius < grid.length,
            "perceptual radius must be smaller than the habitat length");
  }

  std::visit(
      Overloaded{
          [&](const PerceptionForaging& m) {
            require(m.d > 0.0, "model.d must be positive");
            require(m.resource.valid(), "perception_foraging needs a resource expression");
          },
          [&](const StaticMapModel& m) {
            require(m.d > 0.0, "model.d must be positive");
            if (m.kind == StaticMapModel::Kind::DenSite) {
              require(m.den_x0 >= 0.0 && m.den_x0 <= grid.length,
                      "den site x0 must lie inside [0, L]");
            } else {
              require(m.map.valid(), "static map model needs a map expression");
            }
          },
          [&](const Aggregation& m) { require(m.d > 0.0, "model.d must be positive"); },
          [&](const MultiAggregation& m) {
            require(!m.d.empty(), "multi_aggregation needs at least one species");
            for (double d : m.d) require(d > 0.0, "diffusion rates must be positive");
            validate_matrix_square(m.gamma, m.d.size(), "gamma");
          },
          [&](const Marks& m) {
            require(!m.d.empty(), "marks needs at least one species");
            for (double d : m.d) require(d > 0.0, "diffusion rates must be positive");
            require(m.gamma.size() == m.d.size(), "marks needs one advection rate per species");
            validate_matrix_square(m.alpha, m.d.size(), "alpha");
            require(m.mu >= 0.0, "mark decay mu must be nonnegative");
          },
          [&](const ConflictZones& m) {
            require(m.d.size() >= 2, "conflict_zones needs at least two species");
            for (double d : m.d) require(d > 0.0, "diffusion rates must be positive");
            require(m.gamma.size() == m.d.size(), "conflict_zones needs one rate per species");
            for (double g : m.gamma) require(g >= 0.0, "conflict avoidance rates are nonnegative");
            validate_matrix_square(m.rho, m.d.size(), "rho");
            for (std::size_t i = 0; i < m.rho.size(); ++i) {
              for (std::size_t j = 0; j < m.rho.size(); ++j) {
                require(m.rho[i][j] >= 0.0, "encounter rates rho must be nonnegative");
                require(std::abs(m.rho[i][j] - m.rho[j][i]) <= 1e-12,
                        "encounter rates must be symmetric: rho_ij = rho_ji");
              }
            }
            require(m.mu >= 0.0 && m.beta >= 0.0, "mu and beta must be nonnegative");
            require(m.smear >= 0.0, "memory smearing rate must be nonnegative");
          },
          [&](const ConsumerResource& m) {
            require(m.D1 > 0.0 && m.D2 > 0.0, "diffusion rates must be positive");
            require(m.gamma >= 0.0, "consumer_resource gamma must be nonnegative");
            require(m.r > 0.0 && m.K > 0.0 && m.beta > 0.0 && m.alpha > 0.0 && m.c > 0.0 &&
                        m.d > 0.0,
                    "consumer_resource kinetics require r, K, beta, alpha, c, d > 0");
            if (m.map != ConsumerResource::MapKind::None) {
              require(m.b >= 0.0 && m.mu >= 0.0 && m.xi >= 0.0,
                      "map rates b, mu, xi must be nonnegative");
            }
          },
          [&](const DelayScalar& m) {
            require(m.d1 > 0.0, "model.d1 must be positive");
            require(m.tau > 0.0, "delay tau must be positive");
            if (m.growth != DelayScalar::Growth::None) {
              require(m.r > 0.0 && m.carrying > 0.0, "growth requires r > 0 and carrying > 0");
            }
            if (m.growth == DelayScalar::Growth::TemporalDelay ||
                m.growth == DelayScalar::Growth::KernelAverageDelayed) {
              require(m.sigma >= 0.0, "reaction delay sigma must be nonnegative");
            }
          },
          [&](const DelayConsumerResource& m) {
            require(m.d11 > 0.0 && m.d22 > 0.0, "diffusion rates must be positive");
            require(m.d21 >= 0.0, "consumer attraction d21 must be nonnegative");
            require(m.tau > 0.0, "delay tau must be positive");
            require(m.r > 0.0 && m.K > 0.0 && m.beta > 0.0 && m.alpha > 0.0 && m.c > 0.0 &&
                        m.d > 0.0,
                    "kinetics require r, K, beta, alpha, c, d > 0");
          },
          [&](const DelayCompetition& m) {
            require(m.D1 > 0.0 && m.D2 > 0.0, "diffusion rates must be positive");
            require(m.tau > 0.0, "delay tau must be positive");
            require(m.alpha > 0.0 && m.beta > 0.0 && m.gamma > 0.0,
                    "competition kinetics require alpha, beta, gamma > 0");
          },
          [&](const Distributed& m) {
            require(m.d1 > 0.0, "model.d1 must be positive");
            require(m.d3 > 0.0, "spatial kernel diffusion d3 must be positive");
            require(grid.bc.kind == BcKind::ZeroFlux || grid.bc.kind == BcKind::Neumann,
                    "distributed model needs a ZeroFlux or Neumann grid");
            require(m.temporal.kind == TemporalKind::Weak ||
                        m.temporal.kind == TemporalKind::Strong,
                    "distributed model needs a weak or strong temporal kernel");
            validate_temporal(m.temporal);
            require(spec.kernel.is_delta(),
                    "distributed model carries its own spatial kernel; set kernel shape to delta");
            if (m.maturation.kind != TemporalKind::None) {
              validate_temporal(m.maturation);
              require(m.path == Distributed::Path::Quadrature,
                      "a maturation kernel in the growth term is only supported on the "
                      "quadrature path");
            }
            if (m.logistic_growth) {
              require(m.r > 0.0 && m.carrying > 0.0, "growth requires r > 0 and carrying > 0");
            }
          },
          [&](const ShortLong& m) {
            require(m.d > 0.0, "model.d must be positive");
            require(m.alpha_s > 0.0 && m.alpha_l > 0.0 && m.beta_s > 0.0 && m.beta_l > 0.0,
                    "memory uptake/decay rates must be positive");
            require(m.a_s.valid() && m.a_l.valid(), "short_long needs tracked covariates");
            if (!(m.alpha_l < m.alpha_s && m.beta_l < m.beta_s)) {
              warnings.push_back(
                  "short_long: expected alpha_l < alpha_s and beta_l < beta_s (long-term memory "
                  "slower to form and to fade); accepted for sensitivity study");
            }
          },
          [&](const StarvationDenSite& m) {
            require(m.d > 0.0, "model.d must be positive");
            require(m.gamma > 0.0 && m.gamma < m.gamma_plus,
                    "starvation_den_site requires 0 < gamma < gamma_plus");
            require(m.den_x0 >= 0.0 && m.den_x0 <= grid.length,
                    "den site x0 must lie inside [0, L]");
            require(m.resource.valid(), "starvation_den_site needs a resource expression");
            require(m.satisfaction.d_plus > 0.0, "satisfaction d_plus must be positive");
            require(spec.kernel.is_delta(),
                    "starvation_den_site uses the local resource gradient; set kernel to delta");
          }},
      spec.family);
  return warnings;
}

// ---------------------------------------------------------------------------
// Steady states

std::optional<std::vector<double>> homogeneous_steady_state(const ModelSpec& spec,
                                                            const Grid& grid,
                                                            const std::vector<double>& masses) {
  const double L = grid.length;
  auto level = [&](std::size_t i) { return masses.at(i) / L; };

  return std::visit(
      Overloaded{
          [&](const Aggregation&) -> std::optional<std::vector<double>> {
            return std::vector<double>{level(0)};
          },
          [&](const MultiAggregation& m) -> std::optional<std::vector<double>> {
            std::vector<double> s;
            for (std::size_t i = 0; i < m.d.size(); ++i) s.push_back(level(i));
            return s;
          },
          [&](const Marks& m) -> std::optional<std::vector<double>> {
            if (m.mu <= 0.0) return std::nullopt;
            std::vector<double> s;
            for (std::size_t i = 0; i < m.d.size(); ++i) s.push_back(level(i));
            for (std::size_t i = 0; i < m.d.size(); ++i) {
              double growth = 0.0;
              for (std::size_t j = 0; j < m.d.size(); ++j) growth += m.alpha[i][j] * level(j);
              s.push_back(growth / m.mu);
            }
            return s;
          },
          [&](const ConflictZones& m) -> std::optional<std::vector<double>> {
            std::vector<double> s;
            const std::size_t n = m.d.size();
            for (std::size_t i = 0; i < n; ++i) s.push_back(level(i));
            for (std::size_t i = 0; i < n; ++i) {
              double encounters = 0.0;
              for (std::size_t j = 0; j < n; ++j) {
                if (j != i) encounters += m.rho[i][j] * level(j);
              }
              const double growth = level(i) * encounters;
              const double decay = m.mu + m.beta * level(i);
              double k;
              if (m.variant == ConflictZones::Variant::Magnitude) {
                if (decay <= 0.0) return std::nullopt;
                k = growth / decay;
              } else {
                if (growth + decay <= 0.0) return std::nullopt;
                k = growth / (growth + decay);
              }
              s.push_back(k);
            }
            return s;
          },
          [&](const ConsumerResource& m) -> std::optional<std::vector<double>> {
            if (m.c * m.beta <= m.d) return std::nullopt;  // consumer cannot persist
            const double v_star = m.alpha * m.d / (m.c * m.beta - m.d);
            if (v_star >= m.K) return std::nullopt;
            const double u_star = m.r * (1.0 - v_star / m.K) * (m.alpha + v_star) / m.beta;
            std::vector<double> s = {u_star, v_star};
            if (m.map == ConsumerResource::MapKind::LinearQ) {
              if (m.mu <= 0.0) return std::nullopt;
              s.push_back(m.b * v_star / m.mu);
            } else if (m.map == ConsumerResource::MapKind::BilinearQ) {
              const double decay = m.mu + m.xi * u_star;
              if (decay <= 0.0) return std::nullopt;
              s.push_back(m.b * u_star * v_star / decay);
            }
            return s;
          },
          [&](const DelayScalar& m) -> std::optional<std::vector<double>> {
            if (m.growth == DelayScalar::Growth::None) return std::vector<double>{level(0)};
            return std::vector<double>{m.carrying};
          },
          [&](const DelayConsumerResource& m) -> std::optional<std::vector<double>> {
            if (m.c * m.beta <= m.d) return std::nullopt;
            const double v_star = m.alpha * m.d / (m.c * m.beta - m.d);
            if (v_star >= m.K) return std::nullopt;
            const double u_star = m.r * (1.0 - v_star / m.K) * (m.alpha + v_star) / m.beta;
            return std::vector<double>{u_star, v_star};
          },
          [&](const DelayCompetition& m) -> std::optional<std::vector<double>> {
            const double det = 1.0 - m.alpha * m.beta;
            if (det == 0.0) return std::nullopt;
            const double u = (1.0 - m.alpha) / det;
            const double v = (1.0 - m.beta) / det;
            if (u <= 0.0 || v <= 0.0) return std::nullopt;
            return std::vector<double>{u, v};
          },
          [&](const Distributed& m) -> std::optional<std::vector<double>> {
            double u_star = m.logistic_growth || m.maturation.kind != TemporalKind::None
                                ? m.carrying
                                : level(0);
            std::vector<double> s = {u_star};
            if (m.path == Distributed::Path::Augmented) {
              s.push_back(u_star);  // weak stage
              if (m.temporal.kind == TemporalKind::Strong) s.push_back(u_star);
            }
            return s;
          },
          [&](const auto&) -> std::optional<std::vector<double>> { return std::nullopt; }},
      spec.family);
}

// ---------------------------------------------------------------------------
// Augmentation of distributed delays

ModelSpec augment_distributed(const ModelSpec& spec) {
  const auto* dist = std::get_if<Distributed>(&spec.family);
  if (dist == nullptr) {
    throw ConfigError("augmentation applies only to the distributed family; distributed "
                      "kernels on other potentials run through the quadrature path");
  }
  if (dist->maturation.kind != TemporalKind::None) {
    throw ConfigError("a maturation kernel in the growth term has no augmented form here; "
                      "use the quadrature path");
  }
  ModelSpec out = spec;
  std::get<Distributed>(out.family).path = Distributed::Path::Augmented;
  return out;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

SystemRHS base_system(const Grid& grid) {
  SystemRHS sys;
  sys.grid = grid;
  return sys;
}

// Shared velocity builder: every population advects on the face gradient of
// rate * perceive(potential).
std::vector<double> potential_velocity(const Field& potential, const KernelSpec& kernel,
                                       double rate) {
  return scaled_face_gradient(perceive(potential, kernel), rate);
}

}  // namespace

SystemRHS compile_model(const ModelSpec& spec, const Grid& grid) {
  validate_model(spec, grid);
  const KernelSpec kernel = spec.kernel;
  SystemRHS sys = base_system(grid);

  std::visit(
      Overloaded{
          [&](const PerceptionForaging& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d};
            sys.is_population = {true};
            const bool time_dependent = m.resource.depends_on_t();
            const Field m0 = evaluate_on_grid(m.resource, grid, 0.0);
            sys.face_velocities = [m, grid, kernel, time_dependent, m0](
                                      const SimState& s, const HistoryBuffer*) {
              const Field res = time_dependent ? evaluate_on_grid(m.resource, grid, s.t) : m0;
              return std::vector<std::vector<double>>{
                  potential_velocity(res, kernel, m.gamma)};
            };
            sys.stiffness_bound = [](const SimState&) { return 0.0; };
          },
          [&](const StaticMapModel& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d};
            sys.is_population = {true};
            const bool time_dependent = m.map.valid() && m.map.depends_on_t();
            Field map0 = make_field(grid);
            if (m.kind != StaticMapModel::Kind::DenSite) {
              map0 = evaluate_on_grid(m.map, grid, 0.0);
            }
            sys.face_velocities = [m, grid, kernel, time_dependent, map0](
                                      const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> vel(1);
              switch (m.kind) {
                case StaticMapModel::Kind::DenSite: {
                  // den-site pull: down the distance gradient
                  const Field pot =
                      static_potential(m.kind, nullptr, m.den_x0, m.gamma, nullptr, grid);
                  vel[0] = potential_velocity(pot, kernel, -1.0);
                  break;
                }
                case StaticMapModel::Kind::GivenMap:
                case StaticMapModel::Kind::AvgDensity: {
                  const Field map = time_dependent ? evaluate_on_grid(m.map, grid, s.t) : map0;
                  const Field pot = static_potential(m.kind, &map, 0.0, m.gamma, nullptr, grid);
                  vel[0] = potential_velocity(pot, kernel, m.gamma);
                  break;
                }
                case StaticMapModel::Kind::PerCapita: {
                  const Field map = time_dependent ? evaluate_on_grid(m.map, grid, s.t) : map0;
                  const Field pot =
                      static_potential(m.kind, &map, 0.0, m.gamma, &s.fields[0], grid);
                  vel[0] = potential_velocity(pot, kernel, m.gamma);
                  break;
                }
              }
              return vel;
            };
            sys.stiffness_bound = [](const SimState&) { return 0.0; };
          },
          [&](const Aggregation& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d};
            sys.is_population = {true};
            const Matrix gamma = {{m.gamma}};
            sys.face_velocities = [gamma, kernel](const SimState& s, const HistoryBuffer*) {
              return aggregation_velocity(s.fields, gamma, kernel);
            };
            sys.stiffness_bound = [](const SimState&) { return 0.0; };
          },
          [&](const MultiAggregation& m) {
            const std::size_t n = m.d.size();
            for (std::size_t i = 0; i < n; ++i) {
              sys.field_names.push_back("u" + std::to_string(i + 1));
              sys.diffusion.push_back(m.d[i]);
              sys.is_population.push_back(true);
            }
            sys.face_velocities = [gamma = m.gamma, kernel](const SimState& s,
                                                            const HistoryBuffer*) {
              return aggregation_velocity(s.fields, gamma, kernel);
            };
            sys.stiffness_bound = [](const SimState&) { return 0.0; };
          },
          [&](const Marks& m) {
            const std::size_t n = m.d.size();
            for (std::size_t i = 0; i < n; ++i) {
              sys.field_names.push_back("u" + std::to_string(i + 1));
              sys.diffusion.push_back(m.d[i]);
              sys.is_population.push_back(true);
            }
            for (std::size_t i = 0; i < n; ++i) {
              sys.field_names.push_back("p" + std::to_string(i + 1));
              sys.diffusion.push_back(0.0);
              sys.is_population.push_back(false);
            }
            sys.has_reactions = true;
            sys.face_velocities = [n, gamma = m.gamma, kernel](const SimState& s,
                                                               const HistoryBuffer*) {
              std::vector<std::vector<double>> vel(2 * n);
              for (std::size_t i = 0; i < n; ++i) {
                vel[i] = potential_velocity(s.fields[n + i], kernel, gamma[i]);
              }
              return vel;
            };
            sys.reactions = [n, m](const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> r(2 * n);
              const std::vector<Field> u(s.fields.begin(), s.fields.begin() + n);
              for (std::size_t i = 0; i < n; ++i) {
                r[n + i] = marks_rhs(s.fields[n + i], u, m.alpha[i], m.mu, i).values;
              }
              return r;
            };
            sys.stiffness_bound = [mu = m.mu](const SimState&) { return mu; };
          },
          [&](const ConflictZones& m) {
            const std::size_t n = m.d.size();
            for (std::size_t i = 0; i < n; ++i) {
              sys.field_names.push_back("u" + std::to_string(i + 1));
              sys.diffusion.push_back(m.d[i]);
              sys.is_population.push_back(true);
            }
            for (std::size_t i = 0; i < n; ++i) {
              sys.field_names.push_back("k" + std::to_string(i + 1));
              sys.diffusion.push_back(m.smear);
              sys.is_population.push_back(false);
            }
            sys.has_reactions = true;
            sys.face_velocities = [n, gamma = m.gamma, kernel](const SimState& s,
                                                               const HistoryBuffer*) {
              std::vector<std::vector<double>> vel(2 * n);
              for (std::size_t i = 0; i < n; ++i) {
                // repulsion: away from the remembered conflict zones
                vel[i] = potential_velocity(s.fields[n + i], kernel, -gamma[i]);
              }
              return vel;
            };
            sys.reactions = [n, m, kernel](const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> r(2 * n);
              const std::vector<Field> u(s.fields.begin(), s.fields.begin() + n);
              for (std::size_t i = 0; i < n; ++i) {
                r[n + i] = conflict_map_rhs(s.fields[n + i], u, m.rho, m.mu, m.beta, m.variant, i,
                                            m.nonlocal_conflict, kernel)
                               .values;
              }
              return r;
            };
            sys.stiffness_bound = [m, n](const SimState& s) {
              double umax = 0.0;
              for (std::size_t i = 0; i < n; ++i) umax = std::max(umax, max_abs(s.fields[i]));
              double rho_max = 0.0;
              for (const auto& row : m.rho)
                for (double v : row) rho_max = std::max(rho_max, v);
              double bound = m.mu + m.beta * umax;
              if (m.variant == ConflictZones::Variant::Probability) {
                bound += rho_max * umax * umax * static_cast<double>(n);
              }
              return bound;
            };
          },
          [&](const ConsumerResource& m) {
            sys.field_names = {"u", "v"};
            sys.diffusion = {m.D1, m.D2};
            sys.is_population = {true, true};
            const bool has_map = m.map != ConsumerResource::MapKind::None;
            if (has_map) {
              sys.field_names.push_back("q");
              sys.diffusion.push_back(0.0);
              sys.is_population.push_back(false);
            }
            sys.has_reactions = true;
            sys.face_velocities = [m, kernel, has_map](const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> vel(has_map ? 3 : 2);
              const Field& target = has_map ? s.fields[2] : s.fields[1];
              vel[0] = potential_velocity(target, kernel, m.gamma);
              return vel;
            };
            sys.reactions = [m, has_map](const SimState& s, const HistoryBuffer*) {
              ConsumerResourceRhs rhs =
                  consumer_resource_rhs(s.fields[0], s.fields[1], has_map ? &s.fields[2] : nullptr,
                                        m);
              std::vector<std::vector<double>> r;
              r.push_back(std::move(rhs.du.values));
              r.push_back(std::move(rhs.dv.values));
              if (has_map) r.push_back(std::move(rhs.dq->values));
              return r;
            };
            sys.stiffness_bound = [m](const SimState& s) {
              const double umax = max_abs(s.fields[0]);
              return m.d + m.r + m.beta * umax / m.alpha + m.mu + m.xi * umax + m.c * m.beta;
            };
          },
          [&](const DelayScalar& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d1};
            sys.is_population = {true};
            sys.needs_history = true;
            sys.max_delay = std::max(m.tau, m.sigma);
            sys.history_horizon = sys.max_delay;
            sys.has_reactions = m.growth != DelayScalar::Growth::None;
            sys.face_velocities = [m, kernel](const SimState&, const HistoryBuffer* buf) {
              if (buf == nullptr) throw std::logic_error("delay family needs a history buffer");
              const Field u_tau = delay_potential(*buf, m.tau, 0);
              return std::vector<std::vector<double>>{
                  potential_velocity(u_tau, kernel, m.gamma)};
            };
            if (sys.has_reactions) {
              sys.reactions = [m](const SimState& s, const HistoryBuffer* buf) {
                const Field& u = s.fields[0];
                Field w = u;
                switch (m.growth) {
                  case DelayScalar::Growth::Logistic:
                    break;  // w = u
                  case DelayScalar::Growth::SpatialAverage:
                    w = nonlocal_reaction(u, buf, s.t, NonlocalReactionKind::SpatialAverage,
                                          0.0, nullptr, 0);
                    break;
                  case DelayScalar::Growth::TemporalDelay:
                    w = nonlocal_reaction(u, buf, s.t, NonlocalReactionKind::TemporalDelay,
                                          m.sigma, nullptr, 0);
                    break;
                  case DelayScalar::Growth::KernelAverageDelayed:
                    w = nonlocal_reaction(u, buf, s.t,
                                          NonlocalReactionKind::KernelAverageDelayed, m.sigma,
                                          nullptr, 0);
                    break;
                  case DelayScalar::Growth::None:
                    break;
                }
                std::vector<std::vector<double>> r(1);
                r[0].resize(u.values.size());
                for (std::size_t c = 0; c < u.values.size(); ++c) {
                  r[0][c] = m.r * u.values[c] * (1.0 - w.values[c] / m.carrying);
                }
                return r;
              };
            }
            sys.stiffness_bound = [m](const SimState& s) {
              if (m.growth == DelayScalar::Growth::None) return 0.0;
              return m.r * (1.0 + 2.0 * max_abs(s.fields[0]) / m.carrying);
            };
          },
          [&](const DelayConsumerResource& m) {
            sys.field_names = {"u", "v"};
            sys.diffusion = {m.d22, m.d11};
            sys.is_population = {true, true};
            sys.needs_history = true;
            sys.max_delay = m.tau;
            sys.history_horizon = m.tau;
            sys.has_reactions = true;
            sys.face_velocities = [m, kernel](const SimState&, const HistoryBuffer* buf) {
              if (buf == nullptr) throw std::logic_error("delay family needs a history buffer");
              const Field v_tau = delay_potential(*buf, m.tau, 1);
              std::vector<std::vector<double>> vel(2);
              vel[0] = potential_velocity(v_tau, kernel, m.d21);
              return vel;
            };
            sys.reactions = [m](const SimState& s, const HistoryBuffer*) {
              ConsumerResource kin;
              kin.r = m.r;
              kin.K = m.K;
              kin.beta = m.beta;
              kin.alpha = m.alpha;
              kin.c = m.c;
              kin.d = m.d;
              ConsumerResourceRhs rhs = consumer_resource_rhs(s.fields[0], s.fields[1], nullptr,
                                                              kin);
              std::vector<std::vector<double>> r;
              r.push_back(std::move(rhs.du.values));
              r.push_back(std::move(rhs.dv.values));
              return r;
            };
            sys.stiffness_bound = [m](const SimState& s) {
              const double umax = max_abs(s.fields[0]);
              return m.d + m.r + m.beta * umax / m.alpha + m.c * m.beta;
            };
          },
          [&](const DelayCompetition& m) {
            sys.field_names = {"u", "v"};
            sys.diffusion = {m.D1, m.D2};
            sys.is_population = {true, true};
            sys.needs_history = true;
            sys.max_delay = m.tau;
            sys.history_horizon = m.tau;
            sys.has_reactions = true;
            sys.face_velocities = [m, kernel](const SimState&, const HistoryBuffer* buf) {
              if (buf == nullptr) throw std::logic_error("delay family needs a history buffer");
              const Field u_tau = delay_potential(*buf, m.tau, 0);
              const Field v_tau = delay_potential(*buf, m.tau, 1);
              const Field pu = perceive(u_tau, kernel);
              const Field pv = perceive(v_tau, kernel);
              std::vector<std::vector<double>> vel(2);
              // D_ij > 0 moves away from the delayed density
              add_scaled_face_gradient(vel[0], pu, -m.D11);
              add_scaled_face_gradient(vel[0], pv, -m.D12);
              add_scaled_face_gradient(vel[1], pu, -m.D21);
              add_scaled_face_gradient(vel[1], pv, -m.D22);
              return vel;
            };
            sys.reactions = [m](const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> r(2);
              const std::size_t nc = s.fields[0].values.size();
              r[0].resize(nc);
              r[1].resize(nc);
              for (std::size_t c = 0; c < nc; ++c) {
                auto [f, g] = lotka_volterra_competition(s.fields[0].values[c],
                                                         s.fields[1].values[c], m.alpha, m.beta,
                                                         m.gamma);
                r[0][c] = f;
                r[1][c] = g;
              }
              return r;
            };
            sys.stiffness_bound = [m](const SimState& s) {
              const double umax = max_abs(s.fields[0]);
              const double vmax = max_abs(s.fields[1]);
              return std::max(1.0 + 2.0 * umax + m.alpha * vmax,
                              m.gamma * (1.0 + m.beta * umax + 2.0 * vmax));
            };
          },
          [&](const Distributed& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d1};
            sys.is_population = {true};
            sys.has_reactions = m.logistic_growth || m.maturation.kind != TemporalKind::None;
            if (m.temporal.kind == TemporalKind::Strong) {
              sys.construction_flags.push_back("strong_chain:derived-construction");
            }
            if (m.path == Distributed::Path::Augmented) {
              sys.field_names.push_back("v1");
              sys.diffusion.push_back(m.d3);
              sys.is_population.push_back(false);
              if (m.temporal.kind == TemporalKind::Strong) {
                sys.field_names.push_back("v2");
                sys.diffusion.push_back(m.d3);
                sys.is_population.push_back(false);
              }
              const std::size_t advect_on = m.temporal.kind == TemporalKind::Strong ? 2 : 1;
              sys.face_velocities = [m, advect_on](const SimState& s, const HistoryBuffer*) {
                std::vector<std::vector<double>> vel(s.fields.size());
                vel[0] = scaled_face_gradient(s.fields[advect_on], m.gamma);
                return vel;
              };
              sys.reactions = [m](const SimState& s, const HistoryBuffer*) {
                std::vector<std::vector<double>> r(s.fields.size());
                const std::size_t nc = s.fields[0].values.size();
                const double inv_tau = 1.0 / m.temporal.tau;
                r[1].resize(nc);
                for (std::size_t c = 0; c < nc; ++c) {
                  r[1][c] = inv_tau * (s.fields[0].values[c] - s.fields[1].values[c]);
                }
                if (s.fields.size() > 2) {
                  r[2].resize(nc);
                  for (std::size_t c = 0; c < nc; ++c) {
                    r[2][c] = inv_tau * (s.fields[1].values[c] - s.fields[2].values[c]);
                  }
                }
                if (m.logistic_growth) {
                  r[0].resize(nc);
                  for (std::size_t c = 0; c < nc; ++c) {
                    r[0][c] = m.r * s.fields[0].values[c] *
                              (1.0 - s.fields[0].values[c] / m.carrying);
                  }
                }
                return r;
              };
              sys.has_reactions = true;  // auxiliary relaxation stages
            } else {
              sys.needs_history = true;
              sys.max_delay = 12.0 * m.temporal.tau;
              if (m.maturation.kind != TemporalKind::None) {
                sys.max_delay = std::max(sys.max_delay, 12.0 * m.maturation.tau);
              }
              sys.history_horizon = sys.max_delay;
              sys.face_velocities = [m](const SimState&, const HistoryBuffer* buf) {
                if (buf == nullptr) {
                  throw std::logic_error("quadrature path needs a history buffer");
                }
                const Field v = direct_distributed_convolution(*buf, m.temporal, m.d3,
                                                               buf->initial_field(0).grid, 0);
                return std::vector<std::vector<double>>{scaled_face_gradient(v, m.gamma)};
              };
              if (sys.has_reactions) {
                sys.reactions = [m](const SimState& s, const HistoryBuffer* buf) {
                  std::vector<std::vector<double>> r(1);
                  const std::size_t nc = s.fields[0].values.size();
                  r[0].resize(nc);
                  Field w = s.fields[0];
                  if (m.maturation.kind != TemporalKind::None) {
                    w = direct_distributed_convolution(*buf, m.maturation, m.d3,
                                                       s.fields[0].grid, 0);
                  }
                  for (std::size_t c = 0; c < nc; ++c) {
                    r[0][c] = m.r * s.fields[0].values[c] * (1.0 - w.values[c] / m.carrying);
                  }
                  return r;
                };
              }
            }
            sys.stiffness_bound = [m](const SimState& s) {
              double bound = 1.0 / m.temporal.tau;
              if (m.logistic_growth || m.maturation.kind != TemporalKind::None) {
                bound += m.r * (1.0 + 2.0 * max_abs(s.fields[0]) / m.carrying);
              }
              return bound;
            };
          },
          [&](const ShortLong& m) {
            sys.field_names = {"u", "ms", "ml"};
            sys.diffusion = {m.d, 0.0, 0.0};
            sys.is_population = {true, false, false};
            sys.has_reactions = true;
            sys.face_velocities = [m, kernel](const SimState& s, const HistoryBuffer*) {
              std::vector<std::vector<double>> vel(3);
              const Field combined = short_long_combined_map(s.fields[1], s.fields[2], m.c1, m.c2);
              vel[0] = potential_velocity(combined, kernel, 1.0);
              return vel;
            };
            sys.reactions = [m, grid](const SimState& s, const HistoryBuffer*) {
              const Field a_s = evaluate_on_grid(m.a_s, grid, s.t);
              const Field a_l = evaluate_on_grid(m.a_l, grid, s.t);
              auto [ds, dl] = short_long_rhs(s.fields[1], s.fields[2], a_s, a_l, m.alpha_s,
                                             m.alpha_l, m.beta_s, m.beta_l);
              std::vector<std::vector<double>> r(3);
              r[1] = std::move(ds.values);
              r[2] = std::move(dl.values);
              return r;
            };
            sys.stiffness_bound = [m](const SimState&) { return std::max(m.beta_s, m.beta_l); };
          },
          [&](const StarvationDenSite& m) {
            sys.field_names = {"u"};
            sys.diffusion = {m.d};
            sys.is_population = {true};
            const bool time_dependent = m.resource.depends_on_t();
            const Field m0 = evaluate_on_grid(m.resource, grid, 0.0);
            sys.face_velocities = [m, grid, time_dependent, m0](const SimState& s,
                                                                const HistoryBuffer*) {
              const Field res = time_dependent ? evaluate_on_grid(m.resource, grid, s.t) : m0;
              return std::vector<std::vector<double>>{sda_den_site_velocity(
                  s.fields[0], res, m.den_x0, m.gamma, m.gamma_plus, m.satisfaction, grid)};
            };
            sys.stiffness_bound = [](const SimState&) { return 0.0; };
          }},
      spec.family);

  if (!sys.reactions) {
    sys.reactions = [](const SimState& s, const HistoryBuffer*) {
      return std::vector<std::vector<double>>(s.fields.size());
    };
  }
  if (!sys.stiffness_bound) {
    sys.stiffness_bound = [](const SimState&) { return 0.0; };
  }
  return sys;
}

}  // namespace cogmove
