#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "subgrad/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed subgradient optimization over stochastic matrix sequences"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string snapshots;
  std::uint64_t seed = 0;
  bool strict = false;
  bool verify = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_flag("--strict", strict, "exit 2 when any requested check fails");
    cmd->add_flag("--verify", verify, "re-run and compare against existing outputs");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--snapshots", snapshots, "snapshot cadence: geometric or every:k");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run one configured algorithm");
  CLI::App* compare_cmd = app.add_subcommand("compare", "run several algorithms side by side");
  add_common(run_cmd);
  add_common(compare_cmd);

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.got_subcommand(run_cmd) ? run_cmd : compare_cmd;
  subgrad::Overrides over;
  over.strict = strict;
  over.verify = verify;
  if (!out_dir.empty()) over.out = out_dir;
  if (active->count("--seed") > 0) over.seed = seed;
  if (!snapshots.empty()) over.snapshots = snapshots;

  try {
    return subgrad::run_config_file(config_path, over, active == compare_cmd);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
