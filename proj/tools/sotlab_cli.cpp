#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sotlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sotlab - stochastic optimal transport experiments on the torus"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "execute an experiment described by a config file");
  run->add_option("config", config_path, "path to the JSON run config")->required();
  run->add_option("--output", output_path, "output file (overrides the config)");
  run->add_option("--seed", seed, "seed override (overrides the config)")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--threads", threads, "worker threads (default: all cores)");

  CLI::App* list = app.add_subcommand("list", "list available experiments");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    std::cout << sotlab::experiments_table();
    return 0;
  }

  if (threads == 0) {
    if (const char* env = std::getenv("SOTLAB_THREADS")) threads = std::atoi(env);
  }

  sotlab::RunConfig cfg;
  try {
    cfg = sotlab::load_run_config(config_path);
  } catch (const sotlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  sotlab::RunOverrides overrides;
  if (!output_path.empty()) overrides.output = output_path;
  if (seed_set) overrides.seed = seed;
  overrides.threads = threads;

  sotlab::RunOutcome outcome = sotlab::run_experiment(cfg, overrides);
  if (outcome.exit_code == 0)
    std::cout << outcome.summary << " -> " << outcome.output_path << "\n";
  else
    std::cerr << outcome.summary << "\n";
  return outcome.exit_code;
}
