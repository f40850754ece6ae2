#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cogmove/expression.hpp"
#include "cogmove/kernels.hpp"
#include "cogmove/system.hpp"

namespace cogmove {

using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Satisfaction-driven behaviour switching

enum class SatisfactionKind { SupplyDemand, RelativeAverage };
enum class ResponseKind { Step, Smooth };

struct SatisfactionSpec {
  SatisfactionKind kind = SatisfactionKind::SupplyDemand;
  ResponseKind response = ResponseKind::Step;
  double d_plus = 1.0;     // rate when unsatisfied (s < 1)
  double d_minus = 0.0;    // rate when satisfied (s >= 1); exactly s = 1 takes this branch
  double sharpness = 20.0; // smooth response steepness
};

// ---------------------------------------------------------------------------
// Model families

// Movement toward a perceived static resource: u_t = d u_xx - gamma (u (perceive m)_x)_x,
// with the population normalized to unit mass.
struct PerceptionForaging {
  double d = 1.0;
  double gamma = 1.0;
  Expression resource;  // m(x, t)
};

// Static cognitive maps: den-site distance, a given map, resource relative to
// its average, or per-capita resource.
struct StaticMapModel {
  enum class Kind { DenSite, GivenMap, AvgDensity, PerCapita };
  Kind kind = Kind::GivenMap;
  double d = 1.0;
  double gamma = 1.0;
  double den_x0 = 0.0;  // DenSite only
  Expression map;       // resource/map m(x, t); unused for DenSite
};

// Self-aggregation/segregation on the perceived own density.
struct Aggregation {
  double d = 1.0;
  double gamma = 0.0;  // > 0 attracts to crowds, < 0 repels
};

// n interacting populations, each advecting on sum_j gamma_ij * perceive(u_j).
struct MultiAggregation {
  std::vector<double> d;
  Matrix gamma;
};

// Populations responding to marks left on the landscape by the others.
struct Marks {
  std::vector<double> d;
  std::vector<double> gamma;  // response to the own foreign-mark field
  Matrix alpha;               // deposition rates; alpha_ii = 0 recovers the original form
  double mu = 1.0;            // mark decay
};

// Memory of conflict zones: map k_i grows with encounters and decays; the
// populations drift away from their remembered conflict areas.
struct ConflictZones {
  enum class Variant { Magnitude, Probability };
  std::vector<double> d;
  std::vector<double> gamma;  // repulsion rate from the own conflict map (>= 0)
  Matrix rho;                 // symmetric encounter rates
  double mu = 1.0;
  double beta = 0.0;
  Variant variant = Variant::Magnitude;
  double smear = 0.0;           // memory-smearing diffusion for the maps
  bool nonlocal_conflict = false;  // conflicts sensed at a distance
};

// Consumer-resource dynamics with Holling II kinetics and an optional
// resource-memory map steering the consumer.
struct ConsumerResource {
  enum class MapKind { None, LinearQ, BilinearQ };
  double D1 = 1.0;   // consumer diffusion
  double D2 = 1.0;   // resource diffusion
  double gamma = 0.0;
  double r = 1.0;
  double K = 1.0;
  double beta = 1.0;
  double alpha = 1.0;
  double c = 1.0;
  double d = 1.0;    // consumer death rate
  MapKind map = MapKind::None;
  double b = 0.0;    // map uptake
  double mu = 0.0;   // map decay
  double xi = 0.0;   // revisit decay (BilinearQ)
};

// Scalar equation advecting on the own density a fixed delay in the past,
// with an optional growth term whose second argument is local, a spatial
// average, a delayed value, or a delayed kernel average.
struct DelayScalar {
  enum class Growth { None, Logistic, SpatialAverage, TemporalDelay, KernelAverageDelayed };
  double d1 = 1.0;
  double gamma = 0.0;  // > 0 attraction toward the past density
  double tau = 1.0;
  Growth growth = Growth::None;
  double r = 1.0;      // growth rate (the scaled constant of the kernel-average form)
  double carrying = 1.0;
  double sigma = 0.0;  // reaction delay
};

// Consumer tracking the resource density tau time units in the past; the
// resource has no memory-based movement.
struct DelayConsumerResource {
  double d22 = 1.0;  // consumer diffusion
  double d11 = 1.0;  // resource diffusion
  double d21 = 0.0;  // attraction to the past resource (>= 0)
  double tau = 1.0;
  // Holling II kinetics shared with ConsumerResource
  double r = 1.0, K = 1.0, beta = 1.0, alpha = 1.0, c = 1.0, d = 1.0;
};

// Two competitors with memory-based self- and cross-advection and
// Lotka-Volterra kinetics; D_ij > 0 moves away from the delayed density.
struct DelayCompetition {
  double D1 = 1.0, D2 = 1.0;
  double D11 = 0.0, D12 = 0.0, D21 = 0.0, D22 = 0.0;
  double tau = 1.0;
  double alpha = 0.5, beta = 0.5, gamma = 1.0;
};

// Distributed-delay movement: the potential is the spatiotemporal convolution
// of the own density with the heat kernel in space and a weak/strong kernel
// in time. Augmented mode replaces the convolution by auxiliary reaction-
// diffusion stages; Quadrature evaluates it directly from the history.
struct Distributed {
  enum class Path { Augmented, Quadrature };
  double d1 = 1.0;
  double gamma = 0.0;
  double d3 = 1.0;  // diffusion rate of the spatial kernel, d3 = d1 in the source models
  TemporalKernelSpec temporal = TemporalKernelSpec::weak(1.0);
  bool logistic_growth = false;
  double r = 1.0;
  double carrying = 1.0;
  // Optional second kernel feeding the growth term (maturation pathway);
  // quadrature path only.
  TemporalKernelSpec maturation = TemporalKernelSpec::none();
  Path path = Path::Augmented;
};

// Separate short- and long-term memory layers combined into one map.
struct ShortLong {
  double d = 1.0;
  double alpha_s = 1.0, beta_s = 1.0;  // short-term uptake/decay
  double alpha_l = 0.1, beta_l = 0.1;  // long-term uptake/decay (smaller)
  double c1 = 1.0, c2 = 1.0;           // combined map c1 m_s + c2 m_l
  Expression a_s;  // tracked covariates
  Expression a_l;
};

// Starvation-driven advection toward resources competing with a den-site pull;
// the resource rate switches on where satisfaction drops below one.
struct StarvationDenSite {
  double d = 1.0;
  double gamma = 0.1;       // den-site pull, 0 < gamma < gamma_plus
  double gamma_plus = 1.0;  // resource advection when hungry
  double den_x0 = 0.5;
  SatisfactionSpec satisfaction;
  Expression resource;  // m(x, t)
};

using ModelFamily =
    std::variant<PerceptionForaging, StaticMapModel, Aggregation, MultiAggregation, Marks,
                 ConflictZones, ConsumerResource, DelayScalar, DelayConsumerResource,
                 DelayCompetition, Distributed, ShortLong, StarvationDenSite>;

struct ModelSpec {
  ModelFamily family;
  KernelSpec kernel = KernelSpec::delta();

  std::string family_name() const;
  std::size_t population_count() const;
  bool uses_history() const;
  bool has_reactions() const;
};

// Validates sign constraints and structural invariants; collects soft-constraint
// warnings (returned, not thrown).
std::vector<std::string> validate_model(const ModelSpec& spec, const Grid& grid);

// Compiles the family into the stepper's system form.
SystemRHS compile_model(const ModelSpec& spec, const Grid& grid);

// Rewrites a Distributed spec onto its auxiliary-stage path: one extra field
// for the weak kernel, a two-stage chain for the strong kernel (the chain is
// a standard construction and is flagged as derived in reports).
ModelSpec augment_distributed(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Per-family building blocks (exposed for direct testing)

Field static_potential(StaticMapModel::Kind kind, const Field* m, double x0, double gamma,
                       const Field* u, const Grid& grid);

// Velocity of species i on faces: gradient of sum_j gamma_ij * perceive(u_j).
std::vector<std::vector<double>> aggregation_velocity(const std::vector<Field>& u,
                                                      const Matrix& gamma,
                                                      const KernelSpec& kernel);

Field marks_rhs(const Field& p_i, const std::vector<Field>& u, const std::vector<double>& alpha_row,
                double mu, std::size_t self_index);

Field conflict_map_rhs(const Field& k_i, const std::vector<Field>& u, const Matrix& rho,
                       double mu, double beta, ConflictZones::Variant variant,
                       std::size_t self_index, bool nonlocal, const KernelSpec& kernel);

struct ConsumerResourceRhs {
  Field du;
  Field dv;
  std::optional<Field> dq;
};
ConsumerResourceRhs consumer_resource_rhs(const Field& u, const Field& v, const Field* q,
                                          const ConsumerResource& p);

// f = u (1 - u - alpha v), g = gamma v (1 - beta u - v)
std::pair<double, double> lotka_volterra_competition(double u, double v, double alpha, double beta,
                                                     double gamma);

std::pair<Field, Field> short_long_rhs(const Field& m_s, const Field& m_l, const Field& a_s,
                                       const Field& a_l, double alpha_s, double alpha_l,
                                       double beta_s, double beta_l);
Field short_long_combined_map(const Field& m_s, const Field& m_l, double c1, double c2);

Field satisfaction(const SatisfactionSpec& spec, const Field& m, const Field& u);

// Advection rate induced by the satisfaction field: gamma_plus where hungry.
Field starvation_rate(const Field& s, double gamma_plus, ResponseKind response, double sharpness);

// Face velocities of the combined starvation/den-site drive: the rate sits
// inside the divergence next to the resource gradient,
//   V = rate(s) * dm/dx - gamma * d|x - x0|/dx   (per face).
std::vector<double> sda_den_site_velocity(const Field& u, const Field& m, double x0, double gamma,
                                          double gamma_plus, const SatisfactionSpec& spec,
                                          const Grid& grid);

Field delay_potential(const HistoryBuffer& buf, double tau, std::size_t species);

enum class NonlocalReactionKind { SpatialAverage, TemporalDelay, KernelAverageDelayed };

// Second argument of the growth term: a spatial average, a delayed field, or
// a delayed kernel average (K = 1/L recovers the spatial average).
Field nonlocal_reaction(const Field& u, const HistoryBuffer* buf, double t_now,
                        NonlocalReactionKind kind, double sigma, const Matrix* K_table,
                        std::size_t species);

// Homogeneous steady state of the family, one value per compiled field, when
// the algebra provides one. Population levels are taken from `masses`
// (total mass per population; uniform level = mass / L).
std::optional<std::vector<double>> homogeneous_steady_state(const ModelSpec& spec,
                                                            const Grid& grid,
                                                            const std::vector<double>& masses);

inline constexpr double density_floor = 1e-12;  // per-capita and supply/demand divisions

}  // namespace cogmove
