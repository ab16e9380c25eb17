#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "owgp/actions.h"
#include "owgp/eval.h"
#include "owgp/goal_ast.h"

namespace owgp {

// Tunable planner constants. Everything here can be overridden from the
// scenario file or a rules file.
struct PlannerParams {
  EvalParams geom;

  // Physical operator reliabilities (success probabilities).
  double r_move = 0.99;
  double r_look = 0.97;
  double r_pick = 0.95;
  double r_place = 0.95;
  double r_weigh = 0.95;

  // An object is a plausible referent while its denotation probability stays
  // above this floor; examine branches below it are pruned. Kept low enough
  // that one confused type observation at discovery time cannot permanently
  // disqualify an otherwise matching object.
  double den_floor = 0.005;
  // Region search is abandoned once the undiscovered mass drops below this.
  double exists_floor = 0.005;
  // Threshold used in the ExistsIn precondition of region search.
  double exists_default_p = 0.1;
  // Type certainty a confirming look must reach.
  double type_certain_kappa = 0.95;
  // Pose certainty required to grasp.
  double grasp_pos_sd = 0.05;
  double grasp_theta_sd = 0.2;
  // Color / weight certainty counted as "examined".
  double color_known_factor = 0.7;   // fraction of one-observation variance
  double weight_known_sigma = 0.1;   // log-space
  // Assumed region coverage of a single look when planning.
  double look_gain_est = 0.8;
  // Slack applied before splitting a conjunction threshold across properties.
  double prop_slack = 0.98;
  // Threshold used when parking a blocking object in a stash region.
  double p_stash = 0.7;

  int max_level = 1;      // 0 = abstract, 1 = concrete
  int max_expansions = 50000;

  double standoff = 0.6;  // base distance from a manipulation target
};

enum class RuleKind {
  MoveBase,
  Look,
  LookAtRegion,
  Pick,
  Place,
  Weigh,
  ExamineObj,
  FindObj,
  LinkType,
  LinkColor,
  LinkWeight,
  ClearApproach,
  Test,
};

const char* rule_kind_name(RuleKind k);

// Patterns matched against subgoal fluents to detect clobbering during
// regression.
struct DeletePattern {
  enum class Kind {
    NearForOther,   // any NearFor(t) with t != arg
    HandEmpty,
    NotHeldOf,      // NotHeld(arg)
    HoldingOf,      // Holding(arg)
    SpatialOf,      // B(on/in(arg, R), p) with R != arg2
    ExactTest,      // test fluent with name == arg
  };
  Kind kind = Kind::HandEmpty;
  std::string arg, arg2;

  bool matches(const Fluent& f) const;
};

// A rule schema ground on concrete anchors: what it needs, what it makes
// true, what it clobbers, and how likely it is to succeed.
struct RuleInstance {
  RuleKind kind = RuleKind::Test;
  std::string name;           // schema name
  std::string signature;      // canonical, skolem-normalized
  std::vector<std::string> args;
  std::vector<std::pair<Fluent, int>> preconds;  // fluent, abstraction level
  std::vector<Fluent> results;
  std::vector<DeletePattern> deletes;
  double cost = 0.0;          // -log success probability
  bool physical = false;
  std::optional<Action> action;      // present iff physical
  Substitution binding;              // goal-variable bindings made by matching
  std::optional<int> introduces_skolem;

  // Recompute hooks for action_cost().
  ExprPtr expr;               // ExamineObj / FindObj
  std::string obj, region;
};

// -log p of the instance succeeding under the current belief. Physical
// operators use configured reliabilities; ExamineObj uses the denotation
// prior; FindObj uses the undiscovered region mass.
double action_cost(const RuleInstance& inst, const BeliefState& b,
                   const PlannerParams& params);

// Declarative schema for synthetic planner tests.
struct TestSchema {
  std::string name;
  std::vector<std::pair<std::string, int>> preconds;  // test fluent name, level
  std::vector<std::string> results;
  std::vector<std::string> deletes;
  double cost = 1.0;
};

// Generates every rule instance whose results intersect the subgoal.
class RuleLibrary {
 public:
  RuleLibrary(std::shared_ptr<const DomainConfig> domain,
              ObservationNoiseModel noise, PlannerParams params);

  // Standard library with the physical operators and inference rules.
  static RuleLibrary standard(std::shared_ptr<const DomainConfig> domain,
                              ObservationNoiseModel noise,
                              PlannerParams params);
  // Library containing only declarative test schemas.
  static RuleLibrary for_tests(std::vector<TestSchema> schemas,
                               FluentEvaluator eval, PlannerParams params);

  void instantiate(const BeliefState& belief,
                   const std::vector<Fluent>& subgoal, int& skolem_counter,
                   std::vector<RuleInstance>& out) const;

  const PlannerParams& params() const { return params_; }
  const ObservationNoiseModel& noise() const { return noise_; }
  const FluentEvaluator& evaluator() const { return eval_; }
  const std::shared_ptr<const DomainConfig>& domain() const { return domain_; }

 private:
  void instantiate_standard(const BeliefState& belief,
                            const std::vector<Fluent>& subgoal,
                            int& skolem_counter,
                            std::vector<RuleInstance>& out) const;
  void instantiate_tests(const std::vector<Fluent>& subgoal,
                         std::vector<RuleInstance>& out) const;

  std::shared_ptr<const DomainConfig> domain_;
  ObservationNoiseModel noise_;
  PlannerParams params_;
  bool standard_ = true;
  std::vector<TestSchema> test_schemas_;
  FluentEvaluator eval_;
};

}  // namespace owgp
