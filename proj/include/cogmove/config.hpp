#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogmove/measures.hpp"
#include "cogmove/models.hpp"
#include "cogmove/oracle.hpp"
#include "cogmove/stepper.hpp"

namespace cogmove {

// Ordered INI-style key/value text. Section and key order is preserved so
// sweep axes and the echoed config are deterministic.
class Ini {
 public:
  static Ini parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  void set_path(const std::string& dotted_path, const std::string& value);

  // keys of one section in file order
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

  // canonical serialization (sorted sections and keys) used for hashing
  std::string canonical() const;

 private:
  struct Entry {
    std::string key;
    std::string value;
  };
  std::vector<std::pair<std::string, std::vector<Entry>>> sections_;
};

enum class Subcommand { Simulate, Stability, Sweep, Measure, Oracle };

const char* subcommand_name(Subcommand sub);

struct InitialSpec {
  std::map<std::string, Expression> field_exprs;  // by compiled field name
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;
  int mode_index = 0;        // 0 disables the seeded cosine perturbation
  double mode_amplitude = 0.0;
  bool normalize = false;
};

struct MeasureSpec {
  MeasureKind kind = MeasureKind::ForagingSuccess;
  double t_prime = -1.0;  // negative: defaulted to half the run
  double t_max = -1.0;    // negative: defaulted to the end of the run
  double period = 0.0;    // 0: take the detected attractor period
  std::size_t species = 0;
  std::optional<Expression> resource;
};

struct StabilitySpec {
  int j_max = 32;
  std::vector<double> u_star;        // empty: uniform unit-mass levels
  double threshold_k = 0.0;          // 0 disables the threshold report
  std::vector<double> threshold_taus;
};

struct OracleSpec {
  std::vector<Expression> covariates;
  std::vector<double> betas;
  double sigma = 0.1;
  double tau_step = 0.01;
  double length = 10.0;
  int cells = 500;
  bool pde_compare = true;
  double t_final = 1.0;
};

struct RunPlan {
  Subcommand subcommand = Subcommand::Simulate;
  Ini raw;  // retained for per-cell sweep overrides

  ModelSpec model;
  Grid grid;
  StepConfig stepping;
  InitialSpec initial;
  MeasureSpec measure;
  StabilitySpec stability;
  OracleSpec oracle;
  std::vector<SweepAxis> sweep_axes;
  MeasureKind sweep_measure = MeasureKind::ForagingSuccess;
  bool write_trajectory = true;

  std::map<std::string, std::string> echo;  // every resolved key
  std::vector<std::string> defaults_applied;
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;
};

// Parses and fully validates a plan; every unspecified key is filled from
// the documented defaults and echoed. Unknown sections or keys are errors.
RunPlan parse_config(const std::string& text, Subcommand sub,
                     const std::vector<std::string>& overrides = {});
RunPlan parse_config(const Ini& ini, Subcommand sub);

// Runs the plan and writes its outputs under out_dir. Returns the process
// exit code: 0 success, 3 numerical divergence (summary still written).
// Validation problems throw ConfigError (exit 2), filesystem problems throw
// FileError (exit 4).
int execute(const RunPlan& plan, const std::string& out_dir);

// Initial fields for the compiled system per the plan's [initial] section.
std::vector<Field> build_initial_fields(const RunPlan& plan, const SystemRHS& system);

}  // namespace cogmove
