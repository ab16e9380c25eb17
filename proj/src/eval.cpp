#include "owgp/eval.h"

#include <cmath>
#include <stdexcept>

#include "owgp/gaussian.h"

namespace owgp {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

double or_combine(double a, double b) { return a + b - a * b; }

// Probability thresholds compare inclusively; the epsilon absorbs rounding in
// complement-form arithmetic (e.g. 1 - (1 - p) != p in floating point).
constexpr double kProbEps = 1e-9;

}  // namespace

double eval_expr(const ExprPtr& expr, const BeliefState& b) {
  if (!expr) fail("eval of null expression");
  if (const auto* r = std::get_if<RelExpr>(&expr->node)) {
    std::vector<std::string> args;
    args.reserve(r->args.size());
    for (const Term& t : r->args) {
      if (const auto* c = std::get_if<ConstTerm>(&t)) {
        args.push_back(c->name);
      } else if (is_variable(t)) {
        fail("free variable in eval: " + term_to_string(t));
      } else {
        return 0.0;  // unresolved skolem denotes nothing yet
      }
    }
    return prob_ground_relation(b, r->rel, args);
  }
  if (const auto* a = std::get_if<AndExpr>(&expr->node)) {
    return eval_expr(a->lhs, b) * eval_expr(a->rhs, b);
  }
  if (const auto* o = std::get_if<OrExpr>(&expr->node)) {
    return or_combine(eval_expr(o->lhs, b), eval_expr(o->rhs, b));
  }
  if (const auto* x = std::get_if<ExistsExpr>(&expr->node)) {
    // Or-fold of {X:o}(body) over the universe of object anchors.
    double acc = 0.0;
    for (const Anchor& o : b.object_anchors()) {
      Substitution sigma;
      sigma.bindings[x->var] = ConstTerm{o.name};
      acc = or_combine(acc, eval_expr(substitute(x->body, sigma), b));
    }
    return acc;
  }
  fail("eval of a lambda node; apply it to an object first");
}

double den_prob(const ExprPtr& lambda, const std::string& obj,
                const BeliefState& b) {
  if (!lambda) fail("den_prob of null expression");
  const auto* l = std::get_if<LambdaExpr>(&lambda->node);
  if (!l) fail("den_prob expects a lambda expression");
  b.object_or_throw(obj);
  Substitution sigma;
  sigma.bindings[l->var] = ConstTerm{obj};
  return eval_expr(substitute(l->body, sigma), b);
}

namespace {

bool collect_props(const ExprPtr& e, const std::string& var,
                   const DomainConfig& domain, PropSet& out, std::string& err) {
  if (const auto* a = std::get_if<AndExpr>(&e->node)) {
    return collect_props(a->lhs, var, domain, out, err) &&
           collect_props(a->rhs, var, domain, out, err);
  }
  if (const auto* r = std::get_if<RelExpr>(&e->node)) {
    if (r->args.size() != 1 || !is_variable(r->args[0]) ||
        std::get<Variable>(r->args[0]).name != var) {
      err = "relation " + r->rel + " is not unary over the lambda variable";
      return false;
    }
    PropertyDim dim;
    const auto kind = domain.relation_kind(r->rel);
    if (!kind) {
      err = "unknown relation: " + r->rel;
      return false;
    }
    switch (*kind) {
      case RelationKind::Type: dim = PropertyDim::Type; break;
      case RelationKind::Color: dim = PropertyDim::Color; break;
      case RelationKind::Heavy: dim = PropertyDim::Weight; break;
      case RelationKind::Any: return true;  // no observable dimension needed
      default:
        err = "relation " + r->rel + " has no observable property dimension";
        return false;
    }
    auto [it, inserted] = out.rels.emplace(dim, r->rel);
    if (!inserted && it->second != r->rel) {
      err = "conflicting relations on one property dimension: " + it->second +
            " vs " + r->rel;
      return false;
    }
    return true;
  }
  err = "expression contains disjunction or quantification";
  return false;
}

}  // namespace

PropsForResult props_for(const ExprPtr& lambda, const DomainConfig& domain) {
  PropsForResult res;
  if (!lambda) {
    res.error = "null expression";
    return res;
  }
  const auto* l = std::get_if<LambdaExpr>(&lambda->node);
  if (!l) {
    res.error = "not a lambda expression";
    return res;
  }
  PropSet props;
  std::string err;
  if (!collect_props(l->body, l->var, domain, props, err)) {
    res.error = err;
    return res;
  }
  res.props = std::move(props);
  return res;
}

bool krd(const Term& t) { return is_const(t); }

double atom_prob(const BeliefState& b, const BeliefAtom& atom) {
  if (const auto* r = std::get_if<RelAtom>(&atom)) {
    std::vector<std::string> args;
    for (const Term& t : r->args) {
      if (const auto* c = std::get_if<ConstTerm>(&t)) {
        args.push_back(c->name);
      } else {
        return 0.0;
      }
    }
    return prob_ground_relation(b, r->rel, args);
  }
  const auto& d = std::get<DenAtom>(atom);
  if (const auto* c = std::get_if<ConstTerm>(&d.obj)) {
    if (!free_variables(d.expr).empty()) return 0.0;
    return den_prob(d.expr, c->name, b);
  }
  return 0.0;
}

bool holds_bool_fluent(const BeliefState& b, const BeliefAtom& phi, double p) {
  return atom_prob(b, phi) >= p - kProbEps;
}

double exists_in_region_prob(const BeliefState& b, const ExprPtr& expr,
                             const std::string& region_name) {
  const Region* r = b.region(region_name);
  if (!r) fail("unknown region: " + region_name);
  double none = 1.0 - undiscovered_region_mass(b, region_name);
  for (const auto& [id, ob] : b.objects) {
    if (b.held && *b.held == id) continue;
    const Eigen::Vector4d& m = ob.pose_d.mean;
    if (!r->contains_xy(m.x(), m.y())) continue;
    none *= 1.0 - den_prob(expr, ob.anchor.name, b);
  }
  return std::clamp(1.0 - none, 0.0, 1.0);
}

std::vector<std::string> blockers_of(const BeliefState& b,
                                     const std::string& obj,
                                     const EvalParams& params) {
  const ObjectBelief& target = b.object_or_throw(obj);
  const Eigen::Vector2d pos = target.pose_d.xy();

  // Approach direction comes from the region the object is believed to be in.
  Eigen::Vector2d approach(-1.0, 0.0);
  for (const auto& [id, reg] : b.regions) {
    if (reg.contains_xy(pos.x(), pos.y())) {
      approach = reg.approach.normalized();
      break;
    }
  }

  std::vector<std::string> out;
  for (const auto& [id, ob] : b.objects) {
    if (ob.anchor.name == obj) continue;
    if (b.held && *b.held == id) continue;
    const Eigen::Vector2d rel = ob.pose_d.xy() - pos;
    const double ahead = rel.dot(approach);
    const double lateral = std::abs(rel.x() * approach.y() - rel.y() * approach.x());
    if (ahead > 0.02 && ahead < params.clearance_depth &&
        lateral < params.clearance_lateral) {
      out.push_back(ob.anchor.name);
    }
  }
  return out;
}

namespace {

bool near_for(const BeliefState& b, const std::string& target,
              const EvalParams& params) {
  Eigen::Vector2d goal;
  if (const ObjectBelief* ob = b.object(target)) {
    goal = ob->pose_d.xy();
  } else if (const Region* r = b.region(target)) {
    goal = r->center().head<2>();
  } else {
    fail("unknown anchor for nearfor: " + target);
  }
  return (b.robot_pose.xy() - goal).norm() <= params.near_radius;
}

bool holds_prop(const BeliefState& b, const PropFluent& p,
                const EvalParams& params) {
  switch (p.kind) {
    case PropKind::HandEmpty:
      return !b.held.has_value();
    case PropKind::Holding: {
      const auto* c = std::get_if<ConstTerm>(&p.t);
      return c && b.is_held(c->name);
    }
    case PropKind::NotHeld: {
      const auto* c = std::get_if<ConstTerm>(&p.t);
      return c && !b.is_held(c->name);
    }
    case PropKind::NearFor: {
      const auto* c = std::get_if<ConstTerm>(&p.t);
      return c && near_for(b, c->name, params);
    }
    case PropKind::ApproachClear: {
      const auto* c = std::get_if<ConstTerm>(&p.t);
      if (!c) return false;
      if (b.is_held(c->name)) return true;  // in hand, nothing to approach
      return blockers_of(b, c->name, params).empty();
    }
    case PropKind::TypeCertain: {
      const auto* c = std::get_if<ConstTerm>(&p.t);
      if (!c) return false;
      return b.object_or_throw(c->name).type_d.max_prob() >= p.param;
    }
  }
  return false;
}

}  // namespace

bool holds_fluent(const BeliefState& b, const Fluent& f, const EvalParams& params) {
  if (!fluent_ground(f)) return false;
  struct Holds {
    const BeliefState& b;
    const EvalParams& params;
    bool operator()(const BBoolFluent& fl) const {
      return atom_prob(b, fl.atom) >= fl.p - kProbEps;
    }
    bool operator()(const BContFluent& fl) const {
      const auto* c = std::get_if<ConstTerm>(&fl.obj);
      if (!c) return false;
      return holds_cont_fluent(b, c->name, fl.q, fl.mu,
                               Eigen::MatrixXd(fl.sigma_diag.asDiagonal()),
                               fl.delta, fl.p);
    }
    bool operator()(const KrdFluent& fl) const { return krd(fl.t); }
    bool operator()(const BContentsFluent& fl) const {
      return b.confidence_of(fl.region) >= fl.p - kProbEps;
    }
    bool operator()(const BExistsInFluent& fl) const {
      return exists_in_region_prob(b, fl.expr, fl.region) >= fl.p - kProbEps;
    }
    bool operator()(const PropFluent& fl) const { return holds_prop(b, fl, params); }
    bool operator()(const TestFluent&) const {
      fail("test fluent evaluated without an injected evaluator");
    }
  };
  return std::visit(Holds{b, params}, f);
}

FluentEvaluator standard_evaluator(const EvalParams& params) {
  return [params](const BeliefState& b, const Fluent& f) {
    return holds_fluent(b, f, params);
  };
}

namespace {

bool assign_and_check(const BeliefState& b, const GoalFormula& g,
                      const FluentEvaluator& eval, Substitution& sigma,
                      size_t var_index, const std::vector<Anchor>& universe) {
  if (var_index == g.exist_vars.size()) {
    for (const Fluent& f : g.fluents) {
      if (!eval(b, fluent_substitute(f, sigma))) return false;
    }
    return true;
  }
  for (const Anchor& a : universe) {
    sigma.bindings[g.exist_vars[var_index]] = ConstTerm{a.name};
    if (assign_and_check(b, g, eval, sigma, var_index + 1, universe)) return true;
  }
  sigma.bindings.erase(g.exist_vars[var_index]);
  return false;
}

}  // namespace

bool holds_goal(const BeliefState& b, const GoalFormula& g,
                const FluentEvaluator& eval) {
  Substitution sigma;
  const std::vector<Anchor> universe = b.object_anchors();
  return assign_and_check(b, g, eval, sigma, 0, universe);
}

}  // namespace owgp
