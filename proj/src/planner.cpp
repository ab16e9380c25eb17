#include "owgp/planner.h"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>


namespace owgp {

std::string Plan::render() const {
  std::string s = "[";
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i) s += "; ";
    s += steps[i].inst.signature;
  }
  s += "] cost=";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", cost);
  s += buf;
  s += " level=" + std::to_string(level);
  return s;
}

std::vector<Fluent> regress(const std::vector<Fluent>& subgoal,
                            const RuleInstance& inst, int level) {
  // Bind goal variables first; results are stored in bound form.
  std::vector<Fluent> bound;
  bound.reserve(subgoal.size());
  for (const Fluent& f : subgoal) {
    bound.push_back(fluent_substitute(f, inst.binding));
  }

  std::vector<bool> matched(bound.size(), false);
  bool any = false;
  for (size_t i = 0; i < bound.size(); ++i) {
    for (const Fluent& r : inst.results) {
      if (fluent_equal(bound[i], r)) {
        matched[i] = true;
        any = true;
        break;
      }
    }
  }
  if (!any) throw std::invalid_argument("rule results do not match the subgoal");

  std::vector<Fluent> out;
  for (size_t i = 0; i < bound.size(); ++i) {
    if (matched[i]) continue;
    // A surviving fluent must persist through the action.
    for (const DeletePattern& d : inst.deletes) {
      if (d.matches(bound[i])) {
        throw std::invalid_argument("rule clobbers a remaining subgoal fluent");
      }
    }
    out.push_back(std::move(bound[i]));
  }
  for (const auto& [pre, lv] : inst.preconds) {
    if (lv <= level) out.push_back(pre);  // deeper preconditions are postponed
  }

  // Canonical order, duplicates dropped.
  std::sort(out.begin(), out.end(), [](const Fluent& a, const Fluent& b) {
    return fluent_to_string(a) < fluent_to_string(b);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Fluent& a, const Fluent& b) {
                          return fluent_equal(a, b);
                        }),
            out.end());
  return out;
}

namespace {

struct Node {
  std::vector<Fluent> fluents;
  double g = 0.0;
  int depth = 0;
  int parent = -1;
  std::optional<RuleInstance> via;  // rule leading from this node to parent
};

struct QueueEntry {
  double g;
  int depth;
  std::string tie;
  long serial;
  int node;

  bool operator>(const QueueEntry& o) const {
    if (g != o.g) return g > o.g;
    if (depth != o.depth) return depth > o.depth;
    if (tie != o.tie) return tie > o.tie;
    return serial > o.serial;
  }
};

bool all_hold(const BeliefState& belief, const std::vector<Fluent>& fs,
              const FluentEvaluator& eval) {
  for (const Fluent& f : fs) {
    if (!eval(belief, f)) return false;
  }
  return true;
}

// A subgoal demanding two things in the gripper at once (or a full and an
// empty gripper) can never be satisfied; cut those branches early.
bool gripper_consistent(const std::vector<Fluent>& fs) {
  std::string held;
  bool hand_empty = false;
  for (const Fluent& f : fs) {
    const auto* p = std::get_if<PropFluent>(&f);
    if (!p) continue;
    if (p->kind == PropKind::HandEmpty) hand_empty = true;
    if (p->kind == PropKind::Holding) {
      const std::string name = term_to_string(p->t);
      if (!held.empty() && held != name) return false;
      held = name;
    }
  }
  if (held.empty()) return true;
  if (hand_empty) return false;
  for (const Fluent& f : fs) {
    const auto* p = std::get_if<PropFluent>(&f);
    if (p && p->kind == PropKind::NotHeld && term_to_string(p->t) == held) {
      return false;
    }
  }
  return true;
}

Plan extract_plan(const std::vector<Node>& arena, int goal_node_idx,
                  const std::vector<Fluent>& goal, int level) {
  // The found node is the plan's initial preimage; walking parents toward the
  // root yields the steps in execution order.
  Plan plan;
  plan.level = level;
  plan.goal = goal;
  int idx = goal_node_idx;
  Substitution all_bindings;
  while (idx >= 0) {
    const Node& n = arena[idx];
    plan.preimages.push_back(n.fluents);
    if (n.via) {
      plan.steps.push_back(PlanStep{*n.via});
      plan.cost += n.via->cost;
      for (const auto& [var, term] : n.via->binding.bindings) {
        all_bindings.bindings.emplace(var, term);
      }
    }
    idx = n.parent;
  }
  // Later preimages still mention goal variables bound by earlier search
  // applications; ground the whole chain so preimage checks are decisive.
  if (!all_bindings.bindings.empty()) {
    for (auto& pre : plan.preimages) {
      for (Fluent& f : pre) f = fluent_substitute(f, all_bindings);
    }
    for (Fluent& f : plan.goal) f = fluent_substitute(f, all_bindings);
  }
  return plan;
}

}  // namespace

PlanResult plan(const BeliefState& belief, const GoalFormula& goal, int level,
                const RuleLibrary& lib, const PlanLimits& limits,
                const std::vector<std::string>& excluded_signatures) {
  PlanResult res;
  const FluentEvaluator& eval = lib.evaluator();
  const std::set<std::string> excluded(excluded_signatures.begin(),
                                       excluded_signatures.end());

  std::vector<Fluent> root = goal.fluents;
  std::sort(root.begin(), root.end(), [](const Fluent& a, const Fluent& b) {
    return fluent_to_string(a) < fluent_to_string(b);
  });
  root.erase(std::unique(root.begin(), root.end(),
                         [](const Fluent& a, const Fluent& b) {
                           return fluent_equal(a, b);
                         }),
             root.end());

  std::vector<Node> arena;
  arena.push_back(Node{root, 0.0, 0, -1, std::nullopt});

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  open.push(QueueEntry{0.0, 0, "", 0, 0});
  long serial = 1;

  std::unordered_map<std::string, double> best_g;
  best_g[fluent_set_key(root)] = 0.0;

  int skolem_counter = 1;
  int expansions = 0;

  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    // Copy out of the arena: expansion reallocates it.
    const std::vector<Fluent> node_fluents = arena[top.node].fluents;
    const double node_g = arena[top.node].g;
    const int node_depth = arena[top.node].depth;

    const std::string key = fluent_set_key(node_fluents);
    auto bit = best_g.find(key);
    if (bit != best_g.end() && node_g > bit->second + 1e-12) continue;  // stale

    if (all_hold(belief, node_fluents, eval)) {
      res.plan = extract_plan(arena, top.node, goal.fluents, level);
      res.expansions = expansions;
      return res;
    }

    if (++expansions > limits.max_expansions) {
      res.failure = "expansion limit reached";
      res.expansions = expansions;
      return res;
    }

    std::vector<RuleInstance> instances;
    lib.instantiate(belief, node_fluents, skolem_counter, instances);
    for (RuleInstance& inst : instances) {
      if (excluded.count(inst.signature)) continue;
      if (!std::isfinite(inst.cost)) continue;
      std::vector<Fluent> pre;
      try {
        pre = regress(node_fluents, inst, level);
      } catch (const std::invalid_argument&) {
        continue;  // no match or clobbered fluent
      }
      if (!gripper_consistent(pre)) continue;
      const double g = node_g + inst.cost;
      const std::string pre_key = fluent_set_key(pre);
      auto it = best_g.find(pre_key);
      if (it != best_g.end() && it->second <= g + 1e-12) continue;
      best_g[pre_key] = g;
      const int idx = static_cast<int>(arena.size());
      const std::string tie = inst.signature;
      arena.push_back(Node{std::move(pre), g, node_depth + 1,
                           top.node, std::move(inst)});
      open.push(QueueEntry{g, node_depth + 1, tie, serial++, idx});
    }
  }

  res.failure = "no plan found";
  res.expansions = expansions;
  return res;
}

PlanResult refine(const Plan& parent, int step_index, const BeliefState& belief,
                  const RuleLibrary& lib, const PlanLimits& limits,
                  const std::vector<std::string>& excluded_signatures) {
  if (step_index < 0 || step_index >= static_cast<int>(parent.steps.size())) {
    throw std::out_of_range("refine: bad step index");
  }
  const RuleInstance& inst = parent.steps[step_index].inst;
  if (inst.physical && parent.level >= lib.params().max_level) {
    // Already primitive: nothing to expand.
    PlanResult res;
    Plan p;
    p.level = parent.level;
    p.steps = {parent.steps[step_index]};
    p.preimages = {parent.preimages[step_index],
                   parent.preimages[step_index + 1]};
    p.goal = parent.preimages[step_index + 1];
    p.cost = inst.cost;
    res.plan = std::move(p);
    return res;
  }
  GoalFormula sub;
  sub.fluents = parent.preimages[step_index + 1];
  return plan(belief, sub, std::min(parent.level + 1, lib.params().max_level),
              lib, limits, excluded_signatures);
}

}  // namespace owgp
