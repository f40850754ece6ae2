#include "cogmove/stability.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cogmove {

int DispersionResult::max_unstable_index() const {
  int m = -1;
  for (int j : unstable) m = std::max(m, j);
  return m;
}

double DispersionResult::max_growth() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& g : growth) m = std::max(m, g.real());
  return m;
}

double dispersion_aggregation(double d, double gamma, double u_star, const KernelSpec& kernel,
                              double k) {
  return -d * k * k + gamma * u_star * k * k * fourier_symbol(kernel, k);
}

CharacteristicRoot delay_characteristic_root(double d1, double gamma, double u_star,
                                             double fprime, double tau, double k,
                                             const KernelSpec& kernel, double tol) {
  const double A = -d1 * k * k + fprime;
  const double B = gamma * u_star * k * k * fourier_symbol(kernel, k);

  CharacteristicRoot result;
  std::complex<double> lambda(A + B, 0.0);  // exact root at tau = 0
  if (tau == 0.0 || B == 0.0) {
    result.lambda = lambda;
    return result;
  }

  // continuation in tau from the undelayed root, damped Newton at each stage
  const int n_stages = 40;
  for (int stage = 1; stage <= n_stages; ++stage) {
    const double tau_s = tau * stage / n_stages;
    std::complex<double> predictor = lambda;
    std::complex<double> z = predictor;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      const std::complex<double> ex = std::exp(-z * tau_s);
      const std::complex<double> F = z - A - B * ex;
      const std::complex<double> dF = 1.0 + B * tau_s * ex;
      if (std::abs(dF) < 1e-300) break;
      std::complex<double> delta = F / dF;
      // damping keeps the iterate on the tracked branch
      double damp = 1.0;
      while (damp > 1e-4 && std::abs(delta) * damp > 10.0 * (1.0 + std::abs(z))) damp *= 0.5;
      z -= damp * delta;
      if (std::abs(delta) * damp < tol * (1.0 + std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericsError("delay characteristic root: no convergence after 200 iterations "
                          "(tau stage " + std::to_string(tau_s) + ", k = " + std::to_string(k) +
                          ")");
    }
    if (std::abs(z - predictor) > 0.5 * (1.0 + std::abs(predictor))) {
      result.branch_jump = true;
    }
    lambda = z;
  }
  result.lambda = lambda;
  return result;
}

double delay_instability_threshold(double d1, double u_star, double fprime, double tau, double k,
                                   const KernelSpec& kernel, double tol) {
  const double ghat = fourier_symbol(kernel, k);
  if (ghat == 0.0 || u_star <= 0.0) {
    throw ConfigError("threshold undefined: the kernel symbol vanishes at this wavenumber");
  }
  auto growth_at = [&](double gamma) {
    return delay_characteristic_root(d1, gamma, u_star, fprime, tau, k, kernel).lambda.real();
  };
  // closed-form seed (the tau-free crossing), then bisection around it
  const double seed = (d1 - fprime / (k * k)) / (u_star * ghat);
  double lo = seed, hi = seed;
  double width = std::max(0.25 * std::abs(seed), 0.25);
  for (int it = 0; it < 60; ++it) {
    lo = seed - width;
    hi = seed + width;
    if (growth_at(lo) < 0.0 && growth_at(hi) > 0.0) break;
    width *= 2.0;
    if (it == 59) throw NumericsError("threshold bracket not found");
  }
  while (hi - lo > tol * std::max(1.0, std::abs(seed))) {
    const double mid = 0.5 * (lo + hi);
    (growth_at(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double mode_wavenumber(BcKind bc, double length, int j) {
  const double base = bc == BcKind::Periodic ? 2.0 * pi / length : pi / length;
  return base * j;
}

// leading (largest real part) eigenvalue of a small dense real matrix
std::complex<double> leading_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M);
  std::complex<double> best(-std::numeric_limits<double>::infinity(), 0.0);
  for (int i = 0; i < M.rows(); ++i) {
    if (solver.eigenvalues()[i].real() > best.real()) best = solver.eigenvalues()[i];
  }
  return best;
}

std::complex<double> mode_growth(const ModelSpec& spec, const std::vector<double>& u_star,
                                 double k) {
  const double ghat = fourier_symbol(spec.kernel, k);

  if (const auto* agg = std::get_if<Aggregation>(&spec.family)) {
    return {dispersion_aggregation(agg->d, agg->gamma, u_star.at(0), spec.kernel, k), 0.0};
  }
  if (const auto* multi = std::get_if<MultiAggregation>(&spec.family)) {
    const int n = static_cast<int>(multi->d.size());
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        M(i, j) = multi->gamma[i][j] * u_star.at(i) * k * k * ghat;
      }
      M(i, i) += -multi->d[i] * k * k;
    }
    return leading_eigenvalue(M);
  }
  if (const auto* marks = std::get_if<Marks>(&spec.family)) {
    const int n = static_cast<int>(marks->d.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      M(i, i) = -marks->d[i] * k * k;
      // du_i couples to its foreign-mark field through the advective term
      M(i, n + i) = marks->gamma[i] * u_star.at(i) * k * k * ghat;
      for (int j = 0; j < n; ++j) M(n + i, j) = marks->alpha[i][j];
      M(n + i, n + i) = -marks->mu;
    }
    return leading_eigenvalue(M);
  }
  if (const auto* conflict = std::get_if<ConflictZones>(&spec.family)) {
    const int n = static_cast<int>(conflict->d.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      double encounters = 0.0;  // sum_j rho_ij u_j*
      for (int j = 0; j < n; ++j) {
        if (j != i) encounters += conflict->rho[i][j] * u_star.at(j);
      }
      const double growth = u_star.at(i) * encounters;
      const double decay = conflict->mu + conflict->beta * u_star.at(i);
      double k_star, dk_du_self, dk_dk;
      if (conflict->variant == ConflictZones::Variant::Magnitude) {
        k_star = decay > 0.0 ? growth / decay : 0.0;
        dk_du_self = encounters - conflict->beta * k_star;
        dk_dk = -decay;
      } else {
        k_star = growth + decay > 0.0 ? growth / (growth + decay) : 0.0;
        dk_du_self = (1.0 - k_star) * encounters - conflict->beta * k_star;
        dk_dk = -(growth + decay);
      }
      const double lead_symbol = conflict->nonlocal_conflict ? ghat : 1.0;

      M(i, i) = -conflict->d[i] * k * k;
      // repulsion from the own conflict map
      M(i, n + i) = -conflict->gamma[i] * u_star.at(i) * k * k * ghat;
      M(n + i, i) = lead_symbol * dk_du_self;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double factor =
            conflict->variant == ConflictZones::Variant::Probability ? 1.0 - k_star : 1.0;
        M(n + i, j) = factor * lead_symbol * u_star.at(i) * conflict->rho[i][j];
      }
      M(n + i, n + i) = dk_dk - conflict->smear * k * k;
    }
    return leading_eigenvalue(M);
  }
  throw ConfigError("dispersion analysis supports the aggregation, marks and conflict-zone "
                    "families");
}

}  // namespace

DispersionResult analyze_dispersion(const ModelSpec& spec, double length, BcKind bc,
                                    const std::vector<double>& u_star, int j_max) {
  if (j_max < 1) throw ConfigError("dispersion analysis needs j_max >= 1");
  for (double level : u_star) {
    if (!(level > 0.0)) {
      throw ConfigError("dispersion analysis needs a positive homogeneous steady state");
    }
  }
  DispersionResult out;
  for (int j = 0; j <= j_max; ++j) {
    const double k = mode_wavenumber(bc, length, j);
    std::complex<double> lambda;
    if (j == 0) {
      lambda = {0.0, 0.0};  // conservation mode for the transport families
    } else {
      lambda = mode_growth(spec, u_star, k);
    }
    out.mode_index.push_back(j);
    out.wavenumber.push_back(k);
    out.growth.push_back(lambda);
    if (j > 0 && lambda.real() > 0.0) out.unstable.push_back(j);
  }
  return out;
}

std::vector<int> unstable_set(const ModelSpec& spec, double length, BcKind bc,
                              const std::vector<double>& u_star, int j_max) {
  return analyze_dispersion(spec, length, bc, u_star, j_max).unstable;
}

LogisticEigenvalue logistic_eigenvalue(double D, double r, double L, BcKind bc) {
  if (!(D > 0.0 && r > 0.0 && L > 0.0)) {
    throw ConfigError("logistic eigenvalue needs D, r, L > 0");
  }
  if (bc == BcKind::Neumann || bc == BcKind::ZeroFlux) {
    return {-r, 0.0, -1.0, 0.0};
  }
  if (bc == BcKind::Dirichlet) {
    const double mu1 = -r / D + (pi / L) * (pi / L);
    return {mu1, r / (D * D), -1.0 / D, -2.0 * pi * pi / (L * L * L)};
  }
  throw ConfigError("logistic eigenvalue is defined for Neumann and Dirichlet boundaries");
}

}  // namespace cogmove
