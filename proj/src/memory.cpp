#include "cogmove/memory.hpp"

#include <algorithm>
#include <cmath>

namespace cogmove {

const char* temporal_kind_name(TemporalKind kind) {
  switch (kind) {
    case TemporalKind::None: return "none";
    case TemporalKind::DiscreteDelay: return "discrete";
    case TemporalKind::Weak: return "weak";
    case TemporalKind::Strong: return "strong";
  }
  return "unknown";
}

void validate_temporal(const TemporalKernelSpec& spec) {
  if (spec.kind == TemporalKind::None) return;
  if (!(spec.tau > 0.0) || !std::isfinite(spec.tau)) {
    throw ConfigError("temporal kernel requires tau > 0");
  }
}

double temporal_density(const TemporalKernelSpec& spec, double t) {
  validate_temporal(spec);
  switch (spec.kind) {
    case TemporalKind::Weak:
      return std::exp(-t / spec.tau) / spec.tau;
    case TemporalKind::Strong:
      return t * std::exp(-t / spec.tau) / (spec.tau * spec.tau);
    case TemporalKind::DiscreteDelay:
      throw ConfigError("discrete delay has no pointwise density; sample the history instead");
    case TemporalKind::None:
      throw ConfigError("temporal kernel kind 'none' has no density");
  }
  return 0.0;
}

double temporal_tail_mass(const TemporalKernelSpec& spec, double T) {
  validate_temporal(spec);
  if (T <= 0.0) return 1.0;
  const double z = T / spec.tau;
  switch (spec.kind) {
    case TemporalKind::Weak:
      return std::exp(-z);
    case TemporalKind::Strong:
      return (1.0 + z) * std::exp(-z);
    case TemporalKind::DiscreteDelay:
      return T > spec.tau ? 0.0 : 1.0;
    case TemporalKind::None:
      return 0.0;
  }
  return 0.0;
}

HistoryBuffer::HistoryBuffer(std::vector<Field> initial_fields, double t_start, double horizon)
    : initial_(std::move(initial_fields)), t_start_(t_start), horizon_(horizon) {
  if (initial_.empty()) throw ConfigError("history buffer needs at least one species");
  if (!(horizon_ >= 0.0)) throw ConfigError("history horizon must be nonnegative");
  snaps_.emplace_back(t_start_, initial_);
}

double HistoryBuffer::now() const { return snaps_.back().first; }

void HistoryBuffer::push(double t, std::vector<Field> fields) {
  if (!(t > now())) {
    throw std::logic_error("history snapshots must strictly increase in time");
  }
  if (fields.size() != initial_.size()) {
    throw std::logic_error("history snapshot species count mismatch");
  }
  snaps_.emplace_back(t, std::move(fields));
  const double cutoff = t - horizon_;
  // keep one snapshot at or before the cutoff as the interpolation bracket
  while (snaps_.size() > 2 && snaps_[1].first <= cutoff) {
    snaps_.pop_front();
  }
}

Field HistoryBuffer::sample(std::size_t species, double t_query) const {
  if (species >= initial_.size()) throw std::logic_error("history species index out of range");
  if (t_query > now() + 1e-12 * std::max(1.0, std::abs(now()))) {
    throw std::logic_error("history query in the future");
  }
  if (t_query <= t_start_) {
    if (!has_rule_) {
      throw ConfigError("history horizon too short: query at t = " + std::to_string(t_query) +
                        " precedes recorded history and no initial rule is set");
    }
    if (rule_) return rule_(species, t_query);
    return initial_[species];
  }
  // binary search for the first snapshot at or after t_query
  auto it = std::lower_bound(snaps_.begin(), snaps_.end(), t_query,
                             [](const auto& snap, double t) { return snap.first < t; });
  if (it == snaps_.end()) return snaps_.back().second[species];
  if (it == snaps_.begin() || it->first == t_query) return it->second[species];
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  if (t_query < lo.first) {
    // pruned past the horizon; fall back to the oldest retained snapshot
    return lo.second[species];
  }
  const double w = (t_query - lo.first) / (hi.first - lo.first);
  Field out = lo.second[species];
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (1.0 - w) * out.values[i] + w * hi.second[species].values[i];
  }
  return out;
}

namespace {

// Cosine coefficients c_j with u(x) = sum_j c_j cos(j pi x / L).
std::vector<double> cosine_coefficients(const Field& u, int j_max) {
  const Grid& g = u.grid;
  std::vector<double> coeff(static_cast<std::size_t>(j_max) + 1, 0.0);
  for (int j = 0; j <= j_max; ++j) {
    double sum = 0.0;
    for (int i = 0; i < g.n_cells; ++i) {
      sum += u.values[static_cast<std::size_t>(i)] * std::cos(j * pi * g.center(i) / g.length);
    }
    const double scale = (j == 0 ? 1.0 : 2.0) / g.length;
    coeff[static_cast<std::size_t>(j)] = scale * sum * g.dx;
  }
  return coeff;
}

// integral over [T, inf) of exp(-kappa r) * G(r) dr for the constant tail
double tail_integral(const TemporalKernelSpec& spec, double kappa, double T) {
  const double a = kappa + 1.0 / spec.tau;
  if (spec.kind == TemporalKind::Weak) {
    return std::exp(-a * T) / (spec.tau * a);
  }
  // strong: r / tau^2 * exp(-a r)
  return std::exp(-a * T) * (T / a + 1.0 / (a * a)) / (spec.tau * spec.tau);
}

// Product-integration moments of exp(-a r) over [p, q]:
//   E0 = int exp(-a r), E1 = int r exp(-a r), E2 = int r^2 exp(-a r).
struct ExpMoments {
  double e0, e1, e2;
};

ExpMoments exp_moments(double a, double p, double q) {
  const double ep = std::exp(-a * p);
  const double eq = std::exp(-a * q);
  ExpMoments m;
  m.e0 = (ep - eq) / a;
  m.e1 = (p * ep - q * eq) / a + m.e0 / a;
  m.e2 = (p * p * ep - q * q * eq) / a + 2.0 * m.e1 / a;
  return m;
}

// Exact integral of exp(-kappa r) G(r) times the linear interpolant of the
// mode coefficient over one snapshot interval [p, q] (lag coordinates, with
// coefficient values u_p at lag p and u_q at lag q).
double segment_integral(const TemporalKernelSpec& spec, double kappa, double p, double q,
                        double u_p, double u_q) {
  const double a = kappa + 1.0 / spec.tau;
  const double dr = q - p;
  const ExpMoments m = exp_moments(a, p, q);
  double i0, i1;  // weights of u_p and the linear ramp (r - p)/dr
  if (spec.kind == TemporalKind::Weak) {
    i0 = m.e0 / spec.tau;
    i1 = (m.e1 - p * m.e0) / (dr * spec.tau);
  } else {
    const double tau2 = spec.tau * spec.tau;
    i0 = m.e1 / tau2;
    i1 = (m.e2 - p * m.e1) / (dr * tau2);
  }
  return u_p * i0 + (u_q - u_p) * i1;
}

}  // namespace

Field direct_distributed_convolution(const HistoryBuffer& buf, const TemporalKernelSpec& spec,
                                     double d3, const Grid& grid, std::size_t species) {
  validate_temporal(spec);
  if (spec.kind != TemporalKind::Weak && spec.kind != TemporalKind::Strong) {
    throw ConfigError("distributed convolution requires a weak or strong kernel");
  }
  if (grid.bc.kind != BcKind::ZeroFlux && grid.bc.kind != BcKind::Neumann) {
    throw ConfigError("distributed convolution needs a ZeroFlux or Neumann grid "
                      "(cosine eigenbasis)");
  }
  if (!(d3 >= 0.0)) throw ConfigError("d3 must be nonnegative");

  const auto& snaps = buf.snapshots();
  const double t_now = buf.now();
  const double span = t_now - buf.start_time();
  if (!buf.has_initial_rule() && temporal_tail_mass(spec, span) > 1e-6) {
    throw ConfigError("history horizon too short: kernel tail mass beyond the recorded span "
                      "exceeds 1e-6 and no initial continuation is available");
  }
  if (buf.has_initial_rule() && !buf.initial_is_constant()) {
    throw ConfigError("distributed convolution supports only the constant initial continuation");
  }

  // Mode truncation: drop modes whose heat-kernel weight decays below 1e-14
  // within one snapshot spacing (they only matter in the r -> 0 limit).
  double dt_min = span > 0.0 && snaps.size() > 1
                      ? (snaps.back().first - snaps[snaps.size() - 2].first)
                      : spec.tau / 20.0;
  dt_min = std::max(dt_min, 1e-12);
  int j_max = 8;
  if (d3 > 0.0) {
    const double kappa_cut = 32.3 / dt_min;  // exp(-32.3) < 1e-14
    j_max = static_cast<int>(std::ceil(grid.length / pi * std::sqrt(kappa_cut / d3)));
  } else {
    j_max = grid.n_cells;
  }
  // cap at the grid Nyquist limit: higher modes only alias the resolved ones
  j_max = std::clamp(j_max, 8, grid.n_cells);

  std::vector<std::vector<double>> snap_coeffs(snaps.size());
  for (std::size_t s = 0; s < snaps.size(); ++s) {
    snap_coeffs[s] = cosine_coefficients(snaps[s].second[species], j_max);
  }
  const std::vector<double> init_coeffs =
      buf.has_initial_rule() ? cosine_coefficients(buf.initial_field(species), j_max)
                             : std::vector<double>(static_cast<std::size_t>(j_max) + 1, 0.0);

  std::vector<double> phi(static_cast<std::size_t>(j_max) + 1, 0.0);
  for (int j = 0; j <= j_max; ++j) {
    const double kj = j * pi / grid.length;
    const double kappa = d3 * kj * kj;
    // product integration in lag r = t_now - s over the stored snapshots
    // (newest has r = 0): the kernel weight is integrated exactly against
    // the piecewise-linear interpolant of the mode coefficient
    double integral = 0.0;
    for (std::size_t s = snaps.size(); s-- > 1;) {
      const double r_hi = t_now - snaps[s - 1].first;
      const double r_lo = t_now - snaps[s].first;
      integral += segment_integral(spec, kappa, r_lo, r_hi,
                                   snap_coeffs[s][static_cast<std::size_t>(j)],
                                   snap_coeffs[s - 1][static_cast<std::size_t>(j)]);
    }
    if (buf.has_initial_rule()) {
      integral += init_coeffs[static_cast<std::size_t>(j)] * tail_integral(spec, kappa, span);
    }
    phi[static_cast<std::size_t>(j)] = integral;
  }

  Field out = make_field(grid);
  for (int i = 0; i < grid.n_cells; ++i) {
    double v = 0.0;
    for (int j = 0; j <= j_max; ++j) {
      v += phi[static_cast<std::size_t>(j)] * std::cos(j * pi * grid.center(i) / grid.length);
    }
    out.values[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace cogmove
