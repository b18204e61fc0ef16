// cdec: continual class-incremental experiment runner.
//
//   cdec run      --config FILE [--set key=value ...] [--out DIR] [--seeds 1,2,3]
//   cdec ablation --config FILE ...
//   cdec sweep    --config FILE ...
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

#include "cdec/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string seeds;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Experiment config file (key = value lines)");
  cmd->add_option("--set", args.overrides, "Override a config key, KEY=VALUE (repeatable)");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seeds", args.seeds, "Comma-separated run seeds");
}

cdec::ExperimentConfig resolve(const CommonArgs& args) {
  cdec::ExperimentConfig cfg =
      args.config_path.empty() ? cdec::ExperimentConfig{} : cdec::load_config(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw cdec::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.out_dir.empty()) cfg.set("out", args.out_dir);
  if (!args.seeds.empty()) cfg.set("seeds", args.seeds);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual class-incremental learning with classifier decomposition"};
  app.require_subcommand(1);

  CommonArgs run_args, ablation_args, sweep_args;
  auto* run = app.add_subcommand("run", "Multi-seed task sequences; accuracy.csv + summary.json");
  auto* ablation = app.add_subcommand("ablation", "Four-way strategy ablation; ablation.csv");
  auto* sweep = app.add_subcommand("sweep", "Previous-classifier learning-rate sweep; sweep.csv");
  add_common(run, run_args);
  add_common(ablation, ablation_args);
  add_common(sweep, sweep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      cdec::cmd_run(resolve(run_args), std::cout);
    } else if (ablation->parsed()) {
      cdec::cmd_ablation(resolve(ablation_args), std::cout);
    } else if (sweep->parsed()) {
      cdec::cmd_sweep(resolve(sweep_args), std::cout);
    }
  } catch (const cdec::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
