#pragma once

#include <optional>
#include <string>
#include <vector>

#include "owgp/rules.h"

namespace owgp {

struct PlanStep {
  RuleInstance inst;
};

// A regression plan: steps in execution order, plus the fluent conjunction
// that must hold before each step. preimages[k] is required before step k;
// preimages[steps.size()] is the goal itself.
struct Plan {
  std::vector<PlanStep> steps;
  std::vector<std::vector<Fluent>> preimages;
  std::vector<Fluent> goal;
  int level = 0;
  double cost = 0.0;

  std::string render() const;
};

struct PlanLimits {
  int max_expansions = 50000;
};

struct PlanResult {
  std::optional<Plan> plan;
  int expansions = 0;
  std::string failure;  // set when plan is absent
};

// Applies one rule instance backwards: subgoal minus the fluents the rule
// achieves, plus its preconditions at or below `level` (deeper ones are
// postponed). The instance's variable bindings are applied to the remainder.
// Throws if no result fluent matches or if the rule would clobber a
// remaining fluent.
std::vector<Fluent> regress(const std::vector<Fluent>& subgoal,
                            const RuleInstance& inst, int level);

// Uniform-cost regression from the goal to a fluent set satisfied by the
// current belief. Deterministic: ties break on (cost, plan length, last rule
// signature, insertion order). Instances whose results cannot pay for
// themselves (p = 0) are pruned by infinite cost.
PlanResult plan(const BeliefState& belief, const GoalFormula& goal, int level,
                const RuleLibrary& lib, const PlanLimits& limits = {},
                const std::vector<std::string>& excluded_signatures = {});

// Plans for the subgoal that must hold after step `step_index`, one level
// deeper. Primitive steps at the maximum level come back as a single-step
// plan unchanged.
PlanResult refine(const Plan& parent, int step_index, const BeliefState& belief,
                  const RuleLibrary& lib, const PlanLimits& limits = {},
                  const std::vector<std::string>& excluded_signatures = {});

}  // namespace owgp
