#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "perron/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"perron: Perron triplet, drift and minorization checks for positive semigroups"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", config, "experiment config (JSON)")->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output.directory)");
  auto* seed_opt = run->add_option("--seed", seed, "seed for randomized trials (overrides numerics.seed)");
  run->add_flag("--quiet", quiet, "no progress output");

  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("config", config, "experiment config (JSON)")->required();
  auto* vseed_opt = val->add_option("--seed", seed, "seed override, as for run");
  val->add_flag("--quiet", quiet, "print nothing on success");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*val) {
      std::optional<std::uint64_t> s;
      if (*vseed_opt) s = seed;
      const int rc = perron::validate_only(config, std::cerr, s);
      if (rc == 0 && !quiet) std::cout << config << ": valid\n";
      return rc;
    }
    perron::RunRequest rq;
    rq.config_path = config;
    if (*out_opt) rq.out_dir = out_dir;
    if (*seed_opt) rq.seed = seed;
    rq.quiet = quiet;
    return perron::run_config(rq, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
