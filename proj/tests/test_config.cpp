#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cogmove/config.hpp"
#include "cogmove/output.hpp"

using namespace cogmove;

namespace {

const char* minimal_aggregation = R"(
[model]
family = aggregation
gamma = 0.5

[grid]
length = 1.0
cells = 64
bc = periodic

[kernel]
shape = top_hat
radius = 0.1
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cogmove_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("ini parsing: sections, comments, duplicates") {
  Ini ini = Ini::parse("[a]\nx = 1 # trailing\n; comment\n[b]\ny = hello world\n");
  CHECK(ini.get("a", "x") == "1");
  CHECK(ini.get("b", "y") == "hello world");
  CHECK_THROWS_AS(Ini::parse("[a]\nx=1\nx=2\n"), ConfigError);
  CHECK_THROWS_AS(Ini::parse("x=1\n"), ConfigError);
  CHECK_THROWS_AS(Ini::parse("[a\nx=1\n"), ConfigError);
}

TEST_CASE("minimal config fills and echoes every default") {
  RunPlan plan = parse_config(minimal_aggregation, Subcommand::Simulate);
  CHECK(plan.model.family_name() == "aggregation");
  CHECK(plan.grid.n_cells == 64);

  // every key that influenced the run appears in the echo
  CHECK(plan.echo.count("model.d") == 1);
  CHECK(plan.echo.at("model.d") == "1");
  CHECK(plan.echo.count("stepping.cfl") == 1);
  CHECK(plan.echo.count("stepping.t_end") == 1);
  CHECK(plan.echo.count("kernel.boundary_mode") == 1);
  CHECK(plan.echo.count("initial.normalize") == 1);

  // the defaults audit: explicitly set keys are not defaults, all others are
  for (const char* set_key : {"model.family", "model.gamma", "grid.length", "grid.cells",
                              "grid.bc", "kernel.shape", "kernel.radius"}) {
    CHECK(std::find(plan.defaults_applied.begin(), plan.defaults_applied.end(), set_key) ==
          plan.defaults_applied.end());
  }
  CHECK(plan.echo.size() == plan.defaults_applied.size() + 7);

  // this minimal simulate plan resolves exactly these defaulted keys
  const std::vector<std::string> expected_defaults = {
      "initial.mode_amplitude", "initial.mode_index", "initial.noise_amplitude",
      "initial.normalize",      "initial.seed",       "kernel.boundary_mode",
      "measure.kind",           "measure.period",     "measure.species",
      "measure.t_max",          "measure.t_prime",    "model.d",
      "output.write_trajectory", "stability.j_max",   "stability.threshold_k",
      "stepping.advection",     "stepping.cfl",       "stepping.dt",
      "stepping.dt_max",        "stepping.linear_tol", "stepping.mass_drift_tol",
      "stepping.snapshot_every", "stepping.t_end"};
  CHECK(plan.defaults_applied == expected_defaults);
}

TEST_CASE("unknown keys and families are rejected with their paths") {
  try {
    parse_config(std::string(minimal_aggregation) + "\n[model]\n", Subcommand::Simulate);
  } catch (const ConfigError&) {
  }
  CHECK_THROWS_WITH_AS(
      parse_config(std::string(minimal_aggregation) + "gama = 2\n", Subcommand::Simulate),
      "unknown key 'kernel.gama'", ConfigError);

  const std::string bad_family = R"(
[model]
family = teleportation
[grid]
length = 1
cells = 8
)";
  CHECK_THROWS_WITH_AS(parse_config(bad_family, Subcommand::Simulate),
                       "unknown model family 'teleportation'", ConfigError);
}

TEST_CASE("sign constraints are enforced at parse time") {
  const std::string asym = R"(
[model]
family = conflict_zones
d = 1, 1
gamma = 1, 1
rho_1 = 0, 1
rho_2 = 2, 0
[grid]
length = 1
cells = 16
)";
  CHECK_THROWS_AS(parse_config(asym, Subcommand::Simulate), ConfigError);

  const std::string bad_sda = R"(
[model]
family = starvation_den_site
gamma = 2.0
gamma_plus = 1.0
x0 = 0.5
resource = 1+x
[grid]
length = 1
cells = 16
)";
  CHECK_THROWS_AS(parse_config(bad_sda, Subcommand::Simulate), ConfigError);
}

TEST_CASE("reversed memory ordering is recorded as a warning, not an error") {
  const std::string short_long = R"(
[model]
family = short_long
alpha_s = 0.1
alpha_l = 1.0
beta_s = 1.0
beta_l = 0.1
a_s = gauss(0.5,0.1)
a_l = gauss(0.5,0.1)
[grid]
length = 1
cells = 16
)";
  RunPlan plan = parse_config(short_long, Subcommand::Simulate);
  REQUIRE(plan.warnings.size() == 1);
  CHECK(plan.warnings[0].find("alpha_l < alpha_s") != std::string::npos);
}

TEST_CASE("overrides rewrite keys before validation") {
  RunPlan plan = parse_config(minimal_aggregation, Subcommand::Simulate,
                              {"model.gamma=-1.25", "grid.cells=32"});
  CHECK(std::get<Aggregation>(plan.model.family).gamma == -1.25);
  CHECK(plan.grid.n_cells == 32);
  CHECK_THROWS_AS(parse_config(minimal_aggregation, Subcommand::Simulate, {"nonsense"}),
                  ConfigError);
}

TEST_CASE("execute simulate: exit 0, drift diagnostic, determinism") {
  RunPlan plan = parse_config(minimal_aggregation, Subcommand::Simulate);
  const std::string dir1 = temp_dir("sim1");
  const std::string dir2 = temp_dir("sim2");
  CHECK(execute(plan, dir1) == 0);
  CHECK(execute(plan, dir2) == 0);

  const std::string summary = read_file(dir1 + "/summary.json");
  CHECK(summary.find("\"status\": \"ok\"") != std::string::npos);
  CHECK(summary.find("mass_drift_within_tolerance\": true") != std::string::npos);

  // repeated execution of the same plan yields byte-identical outputs
  CHECK(read_file(dir1 + "/trajectory.csv") == read_file(dir2 + "/trajectory.csv"));
  CHECK(read_file(dir1 + "/summary.json") == read_file(dir2 + "/summary.json"));
}

TEST_CASE("execute stability: lambda(0) = 0 row for reactionless families") {
  RunPlan plan = parse_config(minimal_aggregation, Subcommand::Stability);
  const std::string dir = temp_dir("stab");
  CHECK(execute(plan, dir) == 0);
  const std::string csv = read_file(dir + "/dispersion.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "k,re_lambda,im_lambda,unstable");
  const std::string first_row = csv.substr(csv.find('\n') + 1);
  CHECK(first_row.substr(0, first_row.find('\n')) == "0,0,0,0");
}

TEST_CASE("execute measure: net growth identity on a conserving run") {
  const std::string config = R"(
[model]
family = delay_scalar
d1 = 0.2
gamma = 0.0
tau = 0.5
growth = logistic
r = 1.0
K = 1.0

[grid]
length = 1.0
cells = 32
bc = zero_flux

[kernel]
shape = delta

[stepping]
t_end = 4.0
snapshot_every = 0.2

[initial]
u = 0.2
normalize = false

[measure]
kind = net_growth
t_prime = 0.0
t_max = 4.0
)";
  RunPlan plan = parse_config(config, Subcommand::Measure);
  const std::string dir = temp_dir("meas");
  CHECK(execute(plan, dir) == 0);
  const std::string summary = read_file(dir + "/summary.json");
  CHECK(summary.find("net_growth") != std::string::npos);
}

TEST_CASE("execute sweep: single cell matches the direct measure run") {
  const std::string base = R"(
[model]
family = perception_foraging
d = 0.1
gamma = 0.5
resource = 1+0.5*cos(2*pi*x)

[grid]
length = 1.0
cells = 32
bc = periodic

[kernel]
shape = top_hat
radius = 0.1

[stepping]
t_end = 1.0
snapshot_every = 0.1

[measure]
kind = foraging_success
t_prime = 0.5
t_max = 1.0
)";
  RunPlan direct = parse_config(base, Subcommand::Measure);
  const std::string dir_direct = temp_dir("direct");
  CHECK(execute(direct, dir_direct) == 0);
  const std::string direct_csv = read_file(dir_direct + "/measures.csv");
  const std::string direct_value = direct_csv.substr(direct_csv.find('\n') + 1);

  RunPlan swept = parse_config(std::string(base) + "\n[sweep]\nmodel.gamma = 0.5\n",
                               Subcommand::Sweep);
  const std::string dir_sweep = temp_dir("sweep1");
  CHECK(execute(swept, dir_sweep) == 0);
  const std::string sweep_csv = read_file(dir_sweep + "/sweep.csv");
  // the sweep row carries the same measure value as the direct run
  const std::string value_token = direct_value.substr(direct_value.find(',') + 1);
  CHECK(sweep_csv.find(value_token.substr(0, value_token.find(','))) != std::string::npos);

  // two sweep executions are byte-identical
  const std::string dir_sweep2 = temp_dir("sweep2");
  CHECK(execute(swept, dir_sweep2) == 0);
  CHECK(read_file(dir_sweep + "/sweep.csv") == read_file(dir_sweep2 + "/sweep.csv"));
}

TEST_CASE("execute oracle writes the drift table") {
  const std::string config = R"(
[oracle]
a_1 = x
beta_1 = 0.3
sigma = 0.12
tau_step = 0.01
length = 6.0
cells = 300
pde_compare = false
)";
  RunPlan plan = parse_config(config, Subcommand::Oracle);
  const std::string dir = temp_dir("oracle");
  CHECK(execute(plan, dir) == 0);
  const std::string csv = read_file(dir + "/oracle.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "x,drift,predicted_drift,relative_deviation");
  const std::string summary = read_file(dir + "/summary.json");
  CHECK(summary.find("diffusion_1d") != std::string::npos);
  CHECK(summary.find("diffusion_2d_convention") != std::string::npos);
}

TEST_CASE("divergent simulate still writes the summary and exits 3") {
  const std::string config = R"(
[model]
family = perception_foraging
d = 0.1
gamma = 1.0
resource = log(x-0.5)

[grid]
length = 1.0
cells = 32
bc = zero_flux

[kernel]
shape = delta

[stepping]
t_end = 1.0
snapshot_every = 0.5
)";
  RunPlan plan = parse_config(config, Subcommand::Simulate);
  const std::string dir = temp_dir("diverge");
  CHECK(execute(plan, dir) == 3);
  const std::string summary = read_file(dir + "/summary.json");
  CHECK(summary.find("\"status\": \"diverged\"") != std::string::npos);
}

TEST_CASE("csv floats round-trip bit-identically") {
  for (double v : {1.0 / 3.0, 2.5e-17, -0.1, 123456.789, 6.283185307179586}) {
    const std::string text = format_double(v);
    CHECK(std::stod(text) == v);
  }
}
