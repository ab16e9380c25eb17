#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "owgp/planner.h"
#include "owgp/simulator.h"

namespace owgp {

// One hierarchy level of the plan stack. `next_step` is the first step not
// yet executed or discharged.
struct Frame {
  Plan plan;
  int next_step = 0;
};

struct BeliefObjectSummary {
  std::string anchor;
  std::string map_type;
  Eigen::Vector4d pose = Eigen::Vector4d::Zero();
  std::string top_color;
  double weight_median_g = 0.0;
  double detection_weight = 1.0;
  bool held = false;
};

struct TraceRecord {
  int step = 0;  // strictly increasing record index
  std::string kind;  // action | observation | push | pop | replan | bind | infer | done
  std::map<std::string, std::string> payload;
  std::vector<BeliefObjectSummary> belief;
  int stack_depth = 0;
  std::uint64_t seed = 0;
};

using Trace = std::vector<TraceRecord>;

std::vector<BeliefObjectSummary> belief_summary(const BeliefState& b);

enum class RunStatus { Success, PlanningFailure, BudgetExhausted };

const char* run_status_name(RunStatus s);

struct ExecutiveLimits {
  int max_primitives = 200;
  int max_replans = 25;
};

struct Outcome {
  RunStatus status = RunStatus::PlanningFailure;
  int primitives_used = 0;
  int replans = 0;
  BeliefState final_belief;
  Trace trace;
  std::string diagnostic;
};

// Deepest index k such that frames[0..k] all have the preimage of their
// current step satisfied; -1 when even the root frame is invalid. Frames
// above k must be popped and replanned by the caller.
int preimage_valid(const std::vector<Frame>& frames, const BeliefState& b,
                   const FluentEvaluator& eval);

// Forwards a fully ground primitive to the simulator. Skolem-named anchors
// are a planner contract violation and throw.
Observation execute_primitive(const Action& action, Simulator& sim);

// Events produced by folding one observation into the belief.
struct BeliefEvents {
  std::vector<Anchor> new_anchors;
  std::vector<std::string> associated;  // existing anchors a detection matched
};

// Pure belief transition for an executed action and its observation.
BeliefState fold_observation(const BeliefState& b, const Action& action,
                             const Observation& obs,
                             const ObservationNoiseModel& noise,
                             BeliefEvents* events);

// The plan / execute / observe / replan loop.
Outcome run(const BeliefState& initial_belief, const GoalFormula& goal,
            Simulator& sim, const RuleLibrary& lib,
            const ExecutiveLimits& limits, std::uint64_t seed);

}  // namespace owgp
