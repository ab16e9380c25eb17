#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "owgp/scenario.h"

namespace owgp {

// Exit codes of the command-line runner.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitPlanningFailure = 2;
inline constexpr int kExitBudgetExhausted = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDataError = 65;

int exit_code_for(RunStatus status);

struct RunFlags {
  std::string scenario_path;
  std::uint64_t seed = 0;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> seed_range;
  std::string trace_path;
  bool summary = false;
  std::optional<int> max_primitives;
  std::optional<int> max_replans;
  std::string rules_path;
};

struct SeedResult {
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::PlanningFailure;
  int primitives = 0;
  int replans = 0;
};

// One full run of a loaded scenario under a seed.
Outcome run_scenario_once(const Scenario& scenario, std::uint64_t seed);

// Loads, runs (single seed or a range), writes traces, prints the summary
// table when asked, and returns the process exit code.
int run_scenario(const RunFlags& flags, std::ostream& out, std::ostream& err);

}  // namespace owgp
