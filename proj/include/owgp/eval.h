#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "owgp/goal_ast.h"

namespace owgp {

// Geometry constants shared by fluent evaluation, the rule library and the
// executive.
struct EvalParams {
  double near_radius = 0.75;        // base-to-target range for manipulation
  double clearance_lateral = 0.3;   // half-width of the approach corridor
  double clearance_depth = 0.8;     // how far in front a blocker can sit
};

// eval(expr, b): probability of a closed expression body (no Lambda node)
// by the standard recursion: relation leaves are ground-relation
// probabilities, And multiplies, Or is inclusion-exclusion, Exists folds Or
// over all object anchors in the belief. Throws on free variables.
double eval_expr(const ExprPtr& expr, const BeliefState& b);

// P(obj can be denoted by the lambda expression).
double den_prob(const ExprPtr& lambda, const std::string& obj,
                const BeliefState& b);

// Property dimensions a planner would need to confirm to establish the
// denotation. Only conjunctions of unary relations over the lambda variable
// are supported; anything else reports an error and the caller falls back to
// region search.
struct PropsForResult {
  std::optional<PropSet> props;
  std::string error;
};
PropsForResult props_for(const ExprPtr& lambda, const DomainConfig& domain);

// KRD(A): A names a specific internal anchor (rigid designator).
bool krd(const Term& t);

// Probability of a belief atom (ground relation or Den). Variables and
// skolems make the atom false rather than an error; unknown anchors throw.
double atom_prob(const BeliefState& b, const BeliefAtom& atom);

// B_b(phi, p): the agent believes phi with probability at least p.
bool holds_bool_fluent(const BeliefState& b, const BeliefAtom& phi, double p);

// P(an object denoted by expr is in the region): the undiscovered mass plus
// the chance that one of the objects already believed to sit in the region
// satisfies the expression.
double exists_in_region_prob(const BeliefState& b, const ExprPtr& expr,
                             const std::string& region_name);

// Object anchors whose believed position blocks the approach corridor of obj.
std::vector<std::string> blockers_of(const BeliefState& b,
                                     const std::string& obj,
                                     const EvalParams& params);

// Truth of any fluent against a belief. Fluents containing variables or
// unresolved skolems are false.
bool holds_fluent(const BeliefState& b, const Fluent& f, const EvalParams& params);

// Hook for injecting synthetic evaluation in planner tests.
using FluentEvaluator = std::function<bool(const BeliefState&, const Fluent&)>;

FluentEvaluator standard_evaluator(const EvalParams& params);

// Existentially quantified conjunction: some assignment of object anchors to
// the goal variables makes every fluent hold.
bool holds_goal(const BeliefState& b, const GoalFormula& g,
                const FluentEvaluator& eval);

}  // namespace owgp
