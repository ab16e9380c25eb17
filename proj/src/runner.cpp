#include "owgp/runner.h"

#include <chrono>
#include <iomanip>
#include <iostream>

#include "owgp/log.h"
#include "owgp/trace.h"

namespace owgp {

int exit_code_for(RunStatus status) {
  switch (status) {
    case RunStatus::Success: return kExitSuccess;
    case RunStatus::PlanningFailure: return kExitPlanningFailure;
    case RunStatus::BudgetExhausted: return kExitBudgetExhausted;
  }
  return kExitDataError;
}

Outcome run_scenario_once(const Scenario& scenario, std::uint64_t seed) {
  Simulator sim(scenario.world, scenario.noise, *scenario.domain, scenario.sim,
                seed);
  RuleLibrary lib = RuleLibrary::standard(scenario.domain, scenario.noise,
                                          scenario.planner);
  return run(scenario.belief, scenario.goal, sim, lib, scenario.budgets, seed);
}

int run_scenario(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario(flags.scenario_path);
    if (!flags.rules_path.empty()) apply_rules_file(scenario, flags.rules_path);
  } catch (const SchemaError& e) {
    err << "scenario error: " << e.what() << "\n";
    return kExitDataError;
  }
  if (flags.max_primitives) scenario.budgets.max_primitives = *flags.max_primitives;
  if (flags.max_replans) scenario.budgets.max_replans = *flags.max_replans;

  std::vector<std::uint64_t> seeds;
  if (flags.seed_range) {
    for (std::uint64_t s = flags.seed_range->first; s <= flags.seed_range->second; ++s) {
      seeds.push_back(s);
    }
  } else {
    seeds.push_back(flags.seed);
  }

  std::vector<SeedResult> results;
  RunStatus last = RunStatus::PlanningFailure;
  for (std::uint64_t seed : seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome = run_scenario_once(scenario, seed);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    last = outcome.status;
    results.push_back(SeedResult{seed, outcome.status, outcome.primitives_used,
                                 outcome.replans});
    if (!flags.trace_path.empty()) {
      std::string path = flags.trace_path;
      if (seeds.size() > 1) path += "." + std::to_string(seed);
      emit_trace(outcome.trace, path);
    }
    log::info("seed ", seed, ": ", run_status_name(outcome.status), " in ",
              outcome.primitives_used, " primitives, ", outcome.replans,
              " replans, ", ms, " ms");
  }

  if (flags.summary) {
    out << std::left << std::setw(8) << "seed" << std::setw(20) << "status"
        << std::setw(12) << "primitives" << std::setw(8) << "replans" << "\n";
    int ok = 0;
    for (const SeedResult& r : results) {
      out << std::left << std::setw(8) << r.seed << std::setw(20)
          << run_status_name(r.status) << std::setw(12) << r.primitives
          << std::setw(8) << r.replans << "\n";
      if (r.status == RunStatus::Success) ++ok;
    }
    out << "success " << ok << "/" << results.size() << " ("
        << std::fixed << std::setprecision(1)
        << (results.empty() ? 0.0 : 100.0 * ok / results.size()) << "%)\n";
  }

  if (seeds.size() == 1) return exit_code_for(last);
  for (const SeedResult& r : results) {
    if (r.status != RunStatus::Success) return exit_code_for(r.status);
  }
  return kExitSuccess;
}

}  // namespace owgp
