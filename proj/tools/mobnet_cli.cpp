#include <CLI11.hpp>
#include <iostream>

#include "mobnet/acceptance.hpp"
#include "mobnet/config.hpp"
#include "mobnet/experiments.hpp"

// Exit status: 0 ok, 1 hard invariant failed (or an acceptance criterion for
// seed-suite), 2 bad config or usage, 3 runtime error.
int main(int argc, char** argv) {
  CLI::App app{"Mobile-customer queueing network experiments"};
  app.set_version_flag("--version", mobnet::code_version());
  app.require_subcommand(1);

  std::string config_path, output;
  int workers = 0;
  auto* run = app.add_subcommand("run", "run one experiment and write its artifacts");
  run->add_option("config", config_path, "experiment config (JSON with comments)")->required();
  run->add_option("-o,--output", output, "output directory (overrides the config)");
  run->add_option("-w,--workers", workers, "worker threads (MOBNET_WORKERS takes precedence)");

  auto* desc = app.add_subcommand("describe", "print derived quantities without simulating");
  desc->add_option("config", config_path, "experiment config")->required();

  std::uint64_t seed = mobnet::kAcceptanceSeed;
  std::vector<int> only;
  auto* suite = app.add_subcommand("seed-suite", "run the full acceptance battery");
  suite->add_option("--seed", seed, "master seed");
  suite->add_option("--only", only, "criterion ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      mobnet::ExperimentConfig c = mobnet::load_config(config_path);
      if (!output.empty()) c.output = output;
      if (workers > 0) {
        c.workers = workers;
        c.plan.workers = workers;
      }
      mobnet::RunResult r = mobnet::run_experiment(c);
      std::cout << "wrote " << r.files.size() << " files to " << r.directory.string() << "\n";
      if (r.soft_failure) std::cout << "statistical check failed (see summary.json)\n";
      if (r.hard_failure) std::cerr << "hard invariant violated (see summary.json)\n";
      return r.exit_code();
    }
    if (*desc) {
      std::cout << mobnet::describe(mobnet::load_config(config_path));
      return 0;
    }
    bool ok = true;
    mobnet::run_acceptance(seed, only, [&](const mobnet::CriterionResult& r) {
      ok = ok && r.passed;
      std::cout << mobnet::format_line(r) << std::endl;
    });
    return ok ? 0 : 1;
  } catch (const mobnet::ConfigError& e) {
    std::cerr << mobnet::to_string(e.kind()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
