#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "cogmove/config.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cogmove::FileError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct SubcommandArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

int run_subcommand(cogmove::Subcommand sub, const SubcommandArgs& args) {
  const std::string text = read_file(args.config_path);
  const cogmove::RunPlan plan = cogmove::parse_config(text, sub, args.overrides);
  return cogmove::execute(plan, args.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cogmove: a numerical laboratory for cognitive animal-movement models"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, cogmove::Subcommand>> subs = {
      {"simulate", cogmove::Subcommand::Simulate},
      {"stability", cogmove::Subcommand::Stability},
      {"sweep", cogmove::Subcommand::Sweep},
      {"measure", cogmove::Subcommand::Measure},
      {"oracle", cogmove::Subcommand::Oracle},
  };

  std::vector<std::shared_ptr<SubcommandArgs>> all_args;
  for (const auto& [name, sub] : subs) {
    auto args = std::make_shared<SubcommandArgs>();
    all_args.push_back(args);
    CLI::App* cmd = app.add_subcommand(name, name + " run driven by a config file");
    cmd->add_option("--config", args->config_path, "configuration file path")->required();
    cmd->add_option("--out", args->out_dir, "output directory")->required();
    cmd->add_option("--override", args->overrides,
                    "section.key=value overrides applied before validation");
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (app.got_subcommand(subs[i].first)) {
      try {
        return run_subcommand(subs[i].second, *all_args[i]);
      } catch (const cogmove::FileError& err) {
        std::cerr << "file error: " << err.what() << "\n";
        return 4;
      } catch (const cogmove::NumericsError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
      } catch (const cogmove::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
      } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
      }
    }
  }
  return 1;
}
