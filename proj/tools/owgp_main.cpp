#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "owgp/runner.h"

int main(int argc, char** argv) {
  CLI::App app{"owgp: belief-space goal interpretation and replanning runner"};

  owgp::RunFlags flags;
  std::string seeds_spec;
  app.add_option("--scenario", flags.scenario_path, "scenario file (.scn)")
      ->required();
  app.add_option("--seed", flags.seed, "single RNG seed (default 0)");
  app.add_option("--seeds", seeds_spec, "seed range a..b for batch runs");
  app.add_option("--trace", flags.trace_path,
                 "trace output path (JSON lines); batch runs append .<seed>");
  app.add_flag("--summary", flags.summary, "print a per-seed status table");
  int max_primitives = -1, max_replans = -1;
  app.add_option("--max-primitives", max_primitives, "primitive action budget");
  app.add_option("--max-replans", max_replans, "replanning budget");
  app.add_option("--rules", flags.rules_path,
                 "rules file overriding operator reliabilities and thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return owgp::kExitUsage;
  }

  if (!seeds_spec.empty()) {
    const auto dots = seeds_spec.find("..");
    if (dots == std::string::npos) {
      std::cerr << "--seeds expects a range like 0..49\n";
      return owgp::kExitUsage;
    }
    try {
      const std::uint64_t a = std::stoull(seeds_spec.substr(0, dots));
      const std::uint64_t b = std::stoull(seeds_spec.substr(dots + 2));
      if (b < a) throw std::invalid_argument("empty range");
      flags.seed_range = {a, b};
    } catch (const std::exception&) {
      std::cerr << "--seeds expects a range like 0..49\n";
      return owgp::kExitUsage;
    }
  }
  if (max_primitives >= 0) flags.max_primitives = max_primitives;
  if (max_replans >= 0) flags.max_replans = max_replans;

  try {
    return owgp::run_scenario(flags, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return owgp::kExitDataError;
  }
}
