#include "owgp/goal_ast.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace owgp {

// --- terms ------------------------------------------------------------------

bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }
bool is_const(const Term& t) { return std::holds_alternative<ConstTerm>(t); }
bool is_skolem(const Term& t) { return std::holds_alternative<SkolemTerm>(t); }

std::string term_to_string(const Term& t) {
  if (const auto* v = std::get_if<Variable>(&t)) return v->name;
  if (const auto* c = std::get_if<ConstTerm>(&t)) return c->name;
  return "_sk" + std::to_string(std::get<SkolemTerm>(t).id) + "_";
}

bool term_equal(const Term& a, const Term& b) {
  if (a.index() != b.index()) return false;
  if (const auto* v = std::get_if<Variable>(&a)) {
    return v->name == std::get<Variable>(b).name;
  }
  if (const auto* c = std::get_if<ConstTerm>(&a)) {
    return c->name == std::get<ConstTerm>(b).name;
  }
  return std::get<SkolemTerm>(a).id == std::get<SkolemTerm>(b).id;
}

// --- expression constructors ---------------------------------------------------

ExprPtr make_rel(std::string rel, std::vector<Term> args) {
  return std::make_shared<ExprNode>(ExprNode{RelExpr{std::move(rel), std::move(args)}});
}
ExprPtr make_and(ExprPtr l, ExprPtr r) {
  return std::make_shared<ExprNode>(ExprNode{AndExpr{std::move(l), std::move(r)}});
}
ExprPtr make_or(ExprPtr l, ExprPtr r) {
  return std::make_shared<ExprNode>(ExprNode{OrExpr{std::move(l), std::move(r)}});
}
ExprPtr make_exists(std::string var, ExprPtr body) {
  return std::make_shared<ExprNode>(ExprNode{ExistsExpr{std::move(var), std::move(body)}});
}
ExprPtr make_lambda(std::string var, ExprPtr body) {
  return std::make_shared<ExprNode>(ExprNode{LambdaExpr{std::move(var), std::move(body)}});
}

std::string expr_to_string(const ExprPtr& e) {
  if (!e) return "<null>";
  struct Printer {
    std::string operator()(const RelExpr& r) const {
      std::string s = r.rel + "(";
      for (size_t i = 0; i < r.args.size(); ++i) {
        if (i) s += ", ";
        s += term_to_string(r.args[i]);
      }
      return s + ")";
    }
    std::string operator()(const AndExpr& a) const {
      return "and(" + expr_to_string(a.lhs) + ", " + expr_to_string(a.rhs) + ")";
    }
    std::string operator()(const OrExpr& o) const {
      return "or(" + expr_to_string(o.lhs) + ", " + expr_to_string(o.rhs) + ")";
    }
    std::string operator()(const ExistsExpr& x) const {
      return "exists(" + x.var + ", " + expr_to_string(x.body) + ")";
    }
    std::string operator()(const LambdaExpr& l) const {
      return "lambda " + l.var + ". " + expr_to_string(l.body);
    }
  };
  return std::visit(Printer{}, e->node);
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return expr_to_string(a) == expr_to_string(b);
}

namespace {

void collect_free(const ExprPtr& e, std::set<std::string>& bound,
                  std::set<std::string>& out) {
  if (!e) return;
  if (const auto* r = std::get_if<RelExpr>(&e->node)) {
    for (const Term& t : r->args) {
      if (const auto* v = std::get_if<Variable>(&t)) {
        if (!bound.count(v->name)) out.insert(v->name);
      }
    }
  } else if (const auto* a = std::get_if<AndExpr>(&e->node)) {
    collect_free(a->lhs, bound, out);
    collect_free(a->rhs, bound, out);
  } else if (const auto* o = std::get_if<OrExpr>(&e->node)) {
    collect_free(o->lhs, bound, out);
    collect_free(o->rhs, bound, out);
  } else if (const auto* x = std::get_if<ExistsExpr>(&e->node)) {
    const bool already = bound.count(x->var) > 0;
    bound.insert(x->var);
    collect_free(x->body, bound, out);
    if (!already) bound.erase(x->var);
  } else if (const auto* l = std::get_if<LambdaExpr>(&e->node)) {
    const bool already = bound.count(l->var) > 0;
    bound.insert(l->var);
    collect_free(l->body, bound, out);
    if (!already) bound.erase(l->var);
  }
}

}  // namespace

std::set<std::string> free_variables(const ExprPtr& e) {
  std::set<std::string> bound, out;
  collect_free(e, bound, out);
  return out;
}

// --- substitution ----------------------------------------------------------------

std::optional<Term> Substitution::lookup(const std::string& var) const {
  auto it = bindings.find(var);
  if (it == bindings.end()) return std::nullopt;
  return it->second;
}

Term substitute_term(const Term& t, const Substitution& sigma) {
  if (const auto* v = std::get_if<Variable>(&t)) {
    if (auto r = sigma.lookup(v->name)) return *r;
  }
  return t;
}

ExprPtr substitute(const ExprPtr& e, const Substitution& sigma) {
  if (!e || sigma.bindings.empty()) return e;
  if (const auto* r = std::get_if<RelExpr>(&e->node)) {
    std::vector<Term> args;
    args.reserve(r->args.size());
    bool changed = false;
    for (const Term& t : r->args) {
      Term nt = substitute_term(t, sigma);
      changed = changed || !term_equal(nt, t);
      args.push_back(std::move(nt));
    }
    return changed ? make_rel(r->rel, std::move(args)) : e;
  }
  if (const auto* a = std::get_if<AndExpr>(&e->node)) {
    ExprPtr l = substitute(a->lhs, sigma), rr = substitute(a->rhs, sigma);
    return (l == a->lhs && rr == a->rhs) ? e : make_and(l, rr);
  }
  if (const auto* o = std::get_if<OrExpr>(&e->node)) {
    ExprPtr l = substitute(o->lhs, sigma), rr = substitute(o->rhs, sigma);
    return (l == o->lhs && rr == o->rhs) ? e : make_or(l, rr);
  }
  if (const auto* x = std::get_if<ExistsExpr>(&e->node)) {
    // The quantifier shadows its variable; drop it from the substitution.
    Substitution inner = sigma;
    inner.bindings.erase(x->var);
    ExprPtr body = substitute(x->body, inner);
    return body == x->body ? e : make_exists(x->var, body);
  }
  const auto& l = std::get<LambdaExpr>(e->node);
  Substitution inner = sigma;
  inner.bindings.erase(l.var);
  ExprPtr body = substitute(l.body, inner);
  return body == l.body ? e : make_lambda(l.var, body);
}

Term bind_skolem_term(const Term& t, int skolem_id, const Term& replacement) {
  if (const auto* s = std::get_if<SkolemTerm>(&t)) {
    if (s->id == skolem_id) return replacement;
  }
  return t;
}

// --- fluents ---------------------------------------------------------------------

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double x) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

std::string vec_to_string(const Eigen::VectorXd& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v(i));
  }
  return s + "]";
}

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::Pose: return "pose";
    case Quantity::Color: return "color";
    case Quantity::Weight: return "weight";
  }
  return "?";
}

const char* prop_name(PropKind k) {
  switch (k) {
    case PropKind::Holding: return "holding";
    case PropKind::HandEmpty: return "handempty";
    case PropKind::NotHeld: return "notheld";
    case PropKind::NearFor: return "nearfor";
    case PropKind::ApproachClear: return "approachclear";
    case PropKind::TypeCertain: return "typecertain";
  }
  return "?";
}

}  // namespace

std::string atom_to_string(const BeliefAtom& a) {
  if (const auto* r = std::get_if<RelAtom>(&a)) {
    std::string s = r->rel + "(";
    for (size_t i = 0; i < r->args.size(); ++i) {
      if (i) s += ", ";
      s += term_to_string(r->args[i]);
    }
    return s + ")";
  }
  const auto& d = std::get<DenAtom>(a);
  return "den(" + expr_to_string(d.expr) + ", " + term_to_string(d.obj) + ")";
}

std::string fluent_to_string(const Fluent& f) {
  struct Printer {
    std::string operator()(const BBoolFluent& b) const {
      return std::string(b.given_exists ? "B|E(" : "B(") +
             atom_to_string(b.atom) + ", " + fmt(b.p) + ")";
    }
    std::string operator()(const BContFluent& c) const {
      std::string s = "BCont(";
      s += quantity_name(c.q);
      s += "(" + term_to_string(c.obj) + "), mu=" + vec_to_string(c.mu);
      s += ", sig=" + vec_to_string(c.sigma_diag);
      s += ", delta=" + vec_to_string(c.delta);
      s += ", p=" + fmt(c.p) + ")";
      return s;
    }
    std::string operator()(const KrdFluent& k) const {
      return "KRD(" + term_to_string(k.t) + ")";
    }
    std::string operator()(const BContentsFluent& c) const {
      return "BContents(" + c.region + ", " + fmt(c.p) + ")";
    }
    std::string operator()(const BExistsInFluent& e) const {
      return "B(ExistsIn(" + expr_to_string(e.expr) + ", " + e.region + "), " +
             fmt(e.p) + ")";
    }
    std::string operator()(const PropFluent& p) const {
      std::string s = prop_name(p.kind);
      if (p.kind == PropKind::HandEmpty) return s;
      s += "(" + term_to_string(p.t);
      if (p.kind == PropKind::TypeCertain) s += ", " + fmt(p.param);
      return s + ")";
    }
    std::string operator()(const TestFluent& t) const { return "test:" + t.name; }
  };
  return std::visit(Printer{}, f);
}

bool fluent_equal(const Fluent& a, const Fluent& b) {
  return fluent_to_string(a) == fluent_to_string(b);
}

namespace {

Term apply_term(const Term& t, const Substitution& sigma) {
  return substitute_term(t, sigma);
}

BeliefAtom atom_substitute(const BeliefAtom& a, const Substitution& sigma) {
  if (const auto* r = std::get_if<RelAtom>(&a)) {
    RelAtom out = *r;
    for (Term& t : out.args) t = apply_term(t, sigma);
    return out;
  }
  const auto& d = std::get<DenAtom>(a);
  return DenAtom{substitute(d.expr, sigma), apply_term(d.obj, sigma)};
}

}  // namespace

Fluent fluent_substitute(const Fluent& f, const Substitution& sigma) {
  if (sigma.bindings.empty()) return f;
  struct Sub {
    const Substitution& sigma;
    Fluent operator()(const BBoolFluent& b) const {
      return BBoolFluent{atom_substitute(b.atom, sigma), b.p};
    }
    Fluent operator()(BContFluent c) const {
      c.obj = apply_term(c.obj, sigma);
      return c;
    }
    Fluent operator()(KrdFluent k) const {
      k.t = apply_term(k.t, sigma);
      return k;
    }
    Fluent operator()(const BContentsFluent& c) const { return c; }
    Fluent operator()(BExistsInFluent e) const {
      e.expr = substitute(e.expr, sigma);
      return e;
    }
    Fluent operator()(PropFluent p) const {
      p.t = apply_term(p.t, sigma);
      return p;
    }
    Fluent operator()(const TestFluent& t) const { return t; }
  };
  return std::visit(Sub{sigma}, f);
}

namespace {

Term skolem_repl(const Term& t, int id, const Term& repl) {
  return bind_skolem_term(t, id, repl);
}

bool term_is_skolem(const Term& t, int id) {
  const auto* s = std::get_if<SkolemTerm>(&t);
  return s && s->id == id;
}

}  // namespace

Fluent fluent_bind_skolem(const Fluent& f, int skolem_id, const Term& repl) {
  struct Bind {
    int id;
    const Term& repl;
    Fluent operator()(const BBoolFluent& b) const {
      BBoolFluent out = b;
      if (auto* r = std::get_if<RelAtom>(&out.atom)) {
        for (Term& t : r->args) t = skolem_repl(t, id, repl);
      } else {
        auto& d = std::get<DenAtom>(out.atom);
        d.obj = skolem_repl(d.obj, id, repl);
      }
      return out;
    }
    Fluent operator()(BContFluent c) const {
      c.obj = skolem_repl(c.obj, id, repl);
      return c;
    }
    Fluent operator()(KrdFluent k) const {
      k.t = skolem_repl(k.t, id, repl);
      return k;
    }
    Fluent operator()(const BContentsFluent& c) const { return c; }
    Fluent operator()(const BExistsInFluent& e) const { return e; }
    Fluent operator()(PropFluent p) const {
      p.t = skolem_repl(p.t, id, repl);
      return p;
    }
    Fluent operator()(const TestFluent& t) const { return t; }
  };
  return std::visit(Bind{skolem_id, repl}, f);
}

bool fluent_mentions_skolem(const Fluent& f, int skolem_id) {
  struct Scan {
    int id;
    bool operator()(const BBoolFluent& b) const {
      if (const auto* r = std::get_if<RelAtom>(&b.atom)) {
        for (const Term& t : r->args) {
          if (term_is_skolem(t, id)) return true;
        }
        return false;
      }
      return term_is_skolem(std::get<DenAtom>(b.atom).obj, id);
    }
    bool operator()(const BContFluent& c) const { return term_is_skolem(c.obj, id); }
    bool operator()(const KrdFluent& k) const { return term_is_skolem(k.t, id); }
    bool operator()(const BContentsFluent&) const { return false; }
    bool operator()(const BExistsInFluent&) const { return false; }
    bool operator()(const PropFluent& p) const { return term_is_skolem(p.t, id); }
    bool operator()(const TestFluent&) const { return false; }
  };
  return std::visit(Scan{skolem_id}, f);
}

bool fluent_ground(const Fluent& f) {
  struct Scan {
    bool operator()(const BBoolFluent& b) const {
      if (const auto* r = std::get_if<RelAtom>(&b.atom)) {
        for (const Term& t : r->args) {
          if (is_variable(t)) return false;
        }
        return true;
      }
      const auto& d = std::get<DenAtom>(b.atom);
      return !is_variable(d.obj) && free_variables(d.expr).empty();
    }
    bool operator()(const BContFluent& c) const { return !is_variable(c.obj); }
    bool operator()(const KrdFluent& k) const { return !is_variable(k.t); }
    bool operator()(const BContentsFluent&) const { return true; }
    bool operator()(const BExistsInFluent& e) const {
      return free_variables(e.expr).empty();
    }
    bool operator()(const PropFluent& p) const {
      return p.kind == PropKind::HandEmpty || !is_variable(p.t);
    }
    bool operator()(const TestFluent&) const { return true; }
  };
  return std::visit(Scan{}, f);
}

std::string fluent_set_key(const std::vector<Fluent>& fs) {
  std::vector<std::string> keys;
  keys.reserve(fs.size());
  for (const Fluent& f : fs) keys.push_back(fluent_to_string(f));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::string out;
  for (const auto& k : keys) {
    out += k;
    out += ";";
  }
  // Rename skolems by order of appearance so structurally identical subgoals
  // that differ only in fresh skolem ids collide in duplicate detection.
  std::string canon;
  canon.reserve(out.size());
  std::map<std::string, int> seen;
  size_t i = 0;
  while (i < out.size()) {
    if (out.compare(i, 3, "_sk") == 0) {
      size_t j = i + 3;
      while (j < out.size() && std::isdigit(static_cast<unsigned char>(out[j]))) ++j;
      if (j < out.size() && out[j] == '_' && j > i + 3) {
        const std::string id = out.substr(i, j - i + 1);
        auto [it, fresh] = seen.emplace(id, static_cast<int>(seen.size()));
        canon += "_S" + std::to_string(it->second) + "_";
        i = j + 1;
        continue;
      }
    }
    canon += out[i++];
  }
  return canon;
}

std::string goal_to_string(const GoalFormula& g) {
  std::string s;
  if (!g.exist_vars.empty()) {
    s += "exists ";
    for (size_t i = 0; i < g.exist_vars.size(); ++i) {
      if (i) s += ", ";
      s += g.exist_vars[i];
    }
    s += ". ";
  }
  for (size_t i = 0; i < g.fluents.size(); ++i) {
    if (i) s += " & ";
    s += fluent_to_string(g.fluents[i]);
  }
  return s;
}

}  // namespace owgp
