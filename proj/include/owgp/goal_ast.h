#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "owgp/belief.h"

namespace owgp {

// --- terms -------------------------------------------------------------------

struct Variable { std::string name; };
struct ConstTerm { std::string name; };   // anchor or declared named constant
struct SkolemTerm { int id = 0; };        // placeholder for a not-yet-found object

using Term = std::variant<Variable, ConstTerm, SkolemTerm>;

bool is_variable(const Term& t);
bool is_const(const Term& t);
bool is_skolem(const Term& t);
std::string term_to_string(const Term& t);
bool term_equal(const Term& a, const Term& b);

// --- denoting expressions ------------------------------------------------------

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct RelExpr { std::string rel; std::vector<Term> args; };
struct AndExpr { ExprPtr lhs, rhs; };
struct OrExpr { ExprPtr lhs, rhs; };
struct ExistsExpr { std::string var; ExprPtr body; };
struct LambdaExpr { std::string var; ExprPtr body; };

struct ExprNode {
  std::variant<RelExpr, AndExpr, OrExpr, ExistsExpr, LambdaExpr> node;
};

ExprPtr make_rel(std::string rel, std::vector<Term> args);
ExprPtr make_and(ExprPtr l, ExprPtr r);
ExprPtr make_or(ExprPtr l, ExprPtr r);
ExprPtr make_exists(std::string var, ExprPtr body);
ExprPtr make_lambda(std::string var, ExprPtr body);

std::string expr_to_string(const ExprPtr& e);
bool expr_equal(const ExprPtr& a, const ExprPtr& b);
// Names with a free (unbound) occurrence in e.
std::set<std::string> free_variables(const ExprPtr& e);

// --- substitutions ---------------------------------------------------------------

// Maps variable names to terms. Application replaces free occurrences only.
struct Substitution {
  std::map<std::string, Term> bindings;

  std::optional<Term> lookup(const std::string& var) const;
};

ExprPtr substitute(const ExprPtr& e, const Substitution& sigma);
Term substitute_term(const Term& t, const Substitution& sigma);
// Replaces a Skolem term everywhere it occurs (used when a search binds one).
Term bind_skolem_term(const Term& t, int skolem_id, const Term& replacement);

// --- fluents ----------------------------------------------------------------------

// phi inside B(phi, p): a ground relation or a Den statement.
struct RelAtom { std::string rel; std::vector<Term> args; };
struct DenAtom { ExprPtr expr; Term obj; };
using BeliefAtom = std::variant<RelAtom, DenAtom>;

struct BBoolFluent {
  BeliefAtom atom;
  double p = 0.5;
  // When set, object existence is not priced into the probability: the
  // statement is about the property given the object is there. Used for the
  // per-property subgoals of examination, where existence is already carried
  // by the accompanying denotation fluent.
  bool given_exists = false;
};

struct BContFluent {
  Term obj;
  Quantity q = Quantity::Pose;
  Eigen::VectorXd mu;          // empty disables the mean clause
  Eigen::VectorXd sigma_diag;  // diagonal of the covariance bound
  Eigen::VectorXd delta;       // empty disables the mean clause
  double p = 1.0;
};

struct KrdFluent { Term t; };
struct BContentsFluent { std::string region; double p = 0.9; };
struct BExistsInFluent { ExprPtr expr; std::string region; double p = 0.1; };

// Crisp fluents used by the rule library.
enum class PropKind {
  Holding,        // gripper holds t
  HandEmpty,      // gripper empty
  NotHeld,        // t is not the held object
  NearFor,        // robot base within working range of t
  ApproachClear,  // nothing believed to sit in front of t on its surface
  TypeCertain,    // max type probability of t is at least `param`
};
struct PropFluent {
  PropKind kind = PropKind::HandEmpty;
  Term t;          // unused for HandEmpty
  double param = 0.0;
};

// Synthetic named proposition for planner tests with injected evaluators.
struct TestFluent { std::string name; };

using Fluent = std::variant<BBoolFluent, BContFluent, KrdFluent, BContentsFluent,
                            BExistsInFluent, PropFluent, TestFluent>;

std::string atom_to_string(const BeliefAtom& a);
std::string fluent_to_string(const Fluent& f);
bool fluent_equal(const Fluent& a, const Fluent& b);
Fluent fluent_substitute(const Fluent& f, const Substitution& sigma);
Fluent fluent_bind_skolem(const Fluent& f, int skolem_id, const Term& repl);
bool fluent_mentions_skolem(const Fluent& f, int skolem_id);
bool fluent_ground(const Fluent& f);  // no variables (skolems allowed)

std::string fluent_set_key(const std::vector<Fluent>& fs);  // canonical, sorted

// --- goal formulae -------------------------------------------------------------------

// Conjunction of fluents with optional leading existential object variables.
struct GoalFormula {
  std::vector<std::string> exist_vars;
  std::vector<Fluent> fluents;
};

std::string goal_to_string(const GoalFormula& g);

// --- property sets ---------------------------------------------------------------------

enum class PropertyDim { Type, Color, Weight };

// Unordered set of (dimension, relation) pairs, at most one per dimension.
struct PropSet {
  std::map<PropertyDim, std::string> rels;
};

}  // namespace owgp
