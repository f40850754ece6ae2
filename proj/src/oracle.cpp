#include "cogmove/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "cogmove/system.hpp"
#include "cogmove/stepper.hpp"

namespace cogmove {

double LatticeKernel::moment(int p) const {
  double sum = 0.0;
  for (int j = -half_width; j <= half_width; ++j) {
    sum += std::pow(std::abs(j * spacing), p) * weights[static_cast<std::size_t>(j + half_width)];
  }
  return sum;
}

LatticeKernel build_lattice_kernel(double sigma, double tau_step, double spacing) {
  if (!(sigma > 0.0) || !(tau_step > 0.0) || !(spacing > 0.0)) {
    throw ConfigError("lattice kernel needs sigma, tau_step and spacing > 0");
  }
  LatticeKernel k;
  k.sigma = sigma;
  k.tau_step = tau_step;
  k.spacing = spacing;
  k.half_width = std::max(1, static_cast<int>(std::ceil(6.0 * sigma / spacing)));
  k.weights.resize(static_cast<std::size_t>(2 * k.half_width + 1));
  double sum = 0.0;
  for (int j = 0; j <= k.half_width; ++j) {
    const double z = j * spacing / sigma;
    const double w = std::exp(-0.5 * z * z);
    // symmetric fill keeps sum z K(z) = 0 exactly
    k.weights[static_cast<std::size_t>(k.half_width + j)] = w;
    k.weights[static_cast<std::size_t>(k.half_width - j)] = w;
    sum += j == 0 ? w : 2.0 * w;
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

std::vector<double> build_weight_field(const Grid& lattice, const std::vector<Expression>& a,
                                       const std::vector<double>& beta) {
  if (a.size() != beta.size()) {
    throw ConfigError("one weighting coefficient is needed per covariate");
  }
  std::vector<double> w(static_cast<std::size_t>(lattice.n_cells), 1.0);
  for (int i = 0; i < lattice.n_cells; ++i) {
    double exponent = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      exponent += beta[c] * a[c].eval(lattice.center(i), 0.0);
    }
    w[static_cast<std::size_t>(i)] = std::exp(exponent);
  }
  return w;
}

std::vector<double> master_step(const std::vector<double>& p, const LatticeKernel& kernel,
                                const std::vector<double>& w) {
  const int n = static_cast<int>(p.size());
  if (w.size() != p.size()) throw ConfigError("weight field and density sizes differ");
  std::vector<double> out(p.size(), 0.0);
  const int h = kernel.half_width;
  for (int y = 0; y < n; ++y) {
    if (p[static_cast<std::size_t>(y)] == 0.0) continue;
    const int j_lo = std::max(-h, -y);
    const int j_hi = std::min(h, n - 1 - y);
    double normalizer = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
      normalizer += kernel.weights[static_cast<std::size_t>(j + h)] *
                    w[static_cast<std::size_t>(y + j)];
    }
    const double scale = p[static_cast<std::size_t>(y)] / normalizer;
    for (int j = j_lo; j <= j_hi; ++j) {
      out[static_cast<std::size_t>(y + j)] += scale *
                                              kernel.weights[static_cast<std::size_t>(j + h)] *
                                              w[static_cast<std::size_t>(y + j)];
    }
  }
  return out;
}

DriftDiffusion estimate_drift_diffusion(const LatticeKernel& kernel,
                                        const std::vector<double>& w, int x0_index) {
  const int n = static_cast<int>(w.size());
  const int h = kernel.half_width;
  if (x0_index - h < 0 || x0_index + h >= n) {
    throw ConfigError("widen the lattice: the kernel support around x0 leaves the domain");
  }
  double normalizer = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0;
  for (int j = -h; j <= h; ++j) {
    const double f = kernel.weights[static_cast<std::size_t>(j + h)] *
                     w[static_cast<std::size_t>(x0_index + j)];
    const double z = j * kernel.spacing;
    normalizer += f;
    m1 += z * f;
    m2 += z * z * f;
    m3 += z * z * z * f;
  }
  DriftDiffusion out;
  out.drift = m1 / normalizer / kernel.tau_step;
  out.diffusion = m2 / normalizer / (2.0 * kernel.tau_step);
  out.skew_rate = m3 / normalizer / kernel.tau_step;
  return out;
}

FokkerPlanckReport verify_fokker_planck(const std::vector<Expression>& a,
                                        const std::vector<double>& beta, double sigma,
                                        double tau_step, const Grid& lattice, bool pde_compare,
                                        double t_final) {
  const LatticeKernel kernel = build_lattice_kernel(sigma, tau_step, lattice.dx);
  const std::vector<double> w = build_weight_field(lattice, a, beta);

  FokkerPlanckReport report;
  report.diffusion_1d = kernel.moment(2) / (2.0 * tau_step);
  report.diffusion_2d_convention = kernel.moment(2) / (4.0 * tau_step);

  auto target_slope = [&](double x) {
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    double slope = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
      slope += beta[c] * (a[c].eval(x + h, 0.0) - a[c].eval(x - h, 0.0)) / (2.0 * h);
    }
    return slope;
  };

  // sample every interior site whose stencil fits, skipping a margin of one
  // stencil width next to the truncation zone
  const int h = kernel.half_width;
  double max_target = 0.0;
  std::vector<FokkerPlanckSample> samples;
  for (int i = 2 * h; i + 2 * h < lattice.n_cells; ++i) {
    FokkerPlanckSample s;
    s.x = lattice.center(i);
    const DriftDiffusion dd = estimate_drift_diffusion(kernel, w, i);
    s.drift = dd.drift;
    s.predicted_drift = 2.0 * dd.diffusion * target_slope(s.x);
    samples.push_back(s);
    max_target = std::max(max_target, std::abs(s.predicted_drift));
  }
  for (FokkerPlanckSample& s : samples) {
    // relative deviations are meaningful only away from the zero crossing of
    // the predicted drift
    if (std::abs(s.predicted_drift) >= 0.05 * max_target && max_target > 0.0) {
      s.relative_deviation = std::abs(s.drift - s.predicted_drift) / std::abs(s.predicted_drift);
      report.max_relative_deviation =
          std::max(report.max_relative_deviation, s.relative_deviation);
    } else {
      s.relative_deviation = 0.0;
    }
  }
  report.samples = std::move(samples);

  if (pde_compare) {
    report.pde_compared = true;
    // matched initial bump in the middle of the lattice
    const double center = 0.5 * lattice.length;
    const double width = std::max(4.0 * sigma, 8.0 * lattice.dx);
    std::vector<double> p(static_cast<std::size_t>(lattice.n_cells), 0.0);
    double norm = 0.0;
    for (int i = 0; i < lattice.n_cells; ++i) {
      const double z = (lattice.center(i) - center) / width;
      p[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
      norm += p[static_cast<std::size_t>(i)];
    }
    for (double& v : p) v /= norm;

    const long n_steps = std::lround(t_final / tau_step);
    std::vector<double> master = p;
    for (long s = 0; s < n_steps; ++s) master = master_step(master, kernel, w);

    // matching advection-diffusion run: d = M2/(2 tau), drift 2 d sum beta a'
    SystemRHS sys;
    sys.grid = lattice;
    sys.field_names = {"u"};
    sys.diffusion = {report.diffusion_1d};
    sys.is_population = {true};
    Field potential = make_field(lattice);
    for (int i = 0; i < lattice.n_cells; ++i) {
      double val = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        val += beta[c] * a[c].eval(lattice.center(i), 0.0);
      }
      potential.values[static_cast<std::size_t>(i)] = 2.0 * report.diffusion_1d * val;
    }
    const std::vector<double> velocity = potential_face_gradient(potential);
    sys.face_velocities = [velocity](const SimState&, const HistoryBuffer*) {
      return std::vector<std::vector<double>>{velocity};
    };
    sys.reactions = [](const SimState& st, const HistoryBuffer*) {
      return std::vector<std::vector<double>>(st.fields.size());
    };
    sys.stiffness_bound = [](const SimState&) { return 0.0; };

    Field u0 = make_field(lattice);
    for (int i = 0; i < lattice.n_cells; ++i) {
      u0.values[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] / lattice.dx;
    }
    SimState state{0.0, {u0}};
    const double dt = std::min(tau_step, 5e-4);
    const long pde_steps = std::lround(t_final / dt);
    for (long s = 0; s < pde_steps; ++s) {
      state = step(sys, state, dt, AdvectionScheme::Central);
    }

    double l1 = 0.0;
    for (int i = 0; i < lattice.n_cells; ++i) {
      l1 += std::abs(state.fields[0].values[static_cast<std::size_t>(i)] * lattice.dx -
                     master[static_cast<std::size_t>(i)]);
    }
    report.l1_distance = l1;
  }
  return report;
}

}  // namespace cogmove
