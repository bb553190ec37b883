#include <CLI11.hpp>

#include "beamtrack/cli.hpp"
#include "beamtrack/selftest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Beam tracking simulator for mmWave MIMO channels"};
  app.require_subcommand(1);

  beamtrack::SimulateRequest sim;
  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "run seeded tracking experiments and write CSV/JSON results");
  simulate->add_option("-c,--config", config_path, "key=value config file");
  simulate->add_option("-s,--set", sim.overrides, "override one setting, key=value (repeatable)")
      ->allow_extra_args(false);

  beamtrack::SelftestOptions self;
  auto* selftest = app.add_subcommand("selftest", "run the numeric invariant checks");
  selftest->add_option("--perturb-weights", self.weight_perturbation)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : beamtrack::exit_config;
  }

  if (*simulate) {
    if (!config_path.empty()) sim.config_path = config_path;
    return beamtrack::cmd_simulate(sim);
  }
  return beamtrack::cmd_selftest(self);
}
