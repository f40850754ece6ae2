#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "cogmove/grid.hpp"

namespace cogmove {

// Weak kernel t -> exp(-t/tau)/tau fades monotonically; the strong kernel
// t -> t exp(-t/tau)/tau^2 first learns (rises) and then fades, peaking at
// t = tau. Both integrate to one on [0, inf).
enum class TemporalKind { None, DiscreteDelay, Weak, Strong };

struct TemporalKernelSpec {
  TemporalKind kind = TemporalKind::None;
  double tau = 0.0;

  static TemporalKernelSpec none() { return {TemporalKind::None, 0.0}; }
  static TemporalKernelSpec discrete(double tau) { return {TemporalKind::DiscreteDelay, tau}; }
  static TemporalKernelSpec weak(double tau) { return {TemporalKind::Weak, tau}; }
  static TemporalKernelSpec strong(double tau) { return {TemporalKind::Strong, tau}; }
};

const char* temporal_kind_name(TemporalKind kind);
void validate_temporal(const TemporalKernelSpec& spec);

// Pointwise density of the Weak/Strong kernel at lag t >= 0. The discrete
// delay has no density; it is handled by history sampling.
double temporal_density(const TemporalKernelSpec& spec, double t);

// Kernel mass beyond lag T: integral of the density over [T, inf).
double temporal_tail_mass(const TemporalKernelSpec& spec, double T);

// Rule supplying fields for times at or before the start of recorded
// history; species index then query time.
using InitialHistory = std::function<Field(std::size_t, double)>;

// Ring of time-stamped multi-species snapshots with linear interpolation.
// Owned by exactly one simulation; snapshots strictly increase in time and
// entries older than the horizon are pruned (one bracketing snapshot is
// kept so interpolation across the cutoff stays valid).
class HistoryBuffer {
 public:
  HistoryBuffer(std::vector<Field> initial_fields, double t_start, double horizon);

  void push(double t, std::vector<Field> fields);

  // Linear interpolation between bracketing snapshots; queries at or before
  // the start of history evaluate the initial-history rule.
  Field sample(std::size_t species, double t_query) const;

  double start_time() const { return t_start_; }
  double now() const;
  double horizon() const { return horizon_; }
  std::size_t species_count() const { return initial_.size(); }
  std::size_t snapshot_count() const { return snaps_.size(); }

  // Initial data is continued as a constant by default; an explicit rule
  // replaces the continuation, and clearing it makes pre-history queries
  // unavailable (used to surface horizon errors).
  void set_initial_rule(InitialHistory rule) { rule_ = std::move(rule); }
  void clear_initial_rule() { rule_ = nullptr; has_rule_ = false; }
  bool has_initial_rule() const { return has_rule_; }
  bool initial_is_constant() const { return has_rule_ && !rule_; }
  const Field& initial_field(std::size_t species) const { return initial_[species]; }

  // Snapshot access for quadrature over the stored span (oldest first).
  const std::deque<std::pair<double, std::vector<Field>>>& snapshots() const { return snaps_; }

 private:
  std::deque<std::pair<double, std::vector<Field>>> snaps_;
  std::vector<Field> initial_;
  InitialHistory rule_;  // null with has_rule_: constant continuation
  bool has_rule_ = true;
  double t_start_ = 0.0;
  double horizon_ = 0.0;
};

// Spatiotemporal convolution of the recorded history of one species with the
// heat-kernel-in-space, Weak/Strong-in-time weighting. Evaluated by cosine
// series on ZeroFlux/Neumann grids (modes cos(j pi x / L), decay rates
// d3 (j pi / L)^2) with trapezoid quadrature over the stored snapshots and an
// analytic tail for the constant initial continuation.
Field direct_distributed_convolution(const HistoryBuffer& buf, const TemporalKernelSpec& spec,
                                     double d3, const Grid& grid, std::size_t species = 0);

}  // namespace cogmove
