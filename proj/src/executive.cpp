#include "owgp/executive.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "owgp/gaussian.h"

namespace owgp {

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "success";
    case RunStatus::PlanningFailure: return "planning-failure";
    case RunStatus::BudgetExhausted: return "budget-exhausted";
  }
  return "?";
}

std::vector<BeliefObjectSummary> belief_summary(const BeliefState& b) {
  std::vector<BeliefObjectSummary> out;
  for (const auto& [id, ob] : b.objects) {
    BeliefObjectSummary s;
    s.anchor = ob.anchor.name;
    s.map_type = ob.type_d.map_type();
    s.pose = ob.pose_d.mean;
    s.weight_median_g = ob.weight_d.median_grams();
    s.detection_weight = ob.detection_weight;
    s.held = b.held && *b.held == id;
    double best = 0.0;
    s.top_color = "unknown";
    if (b.domain) {
      for (const auto& [name, box] : b.domain->colors) {
        const double p = prob_ground_relation(b, name, {ob.anchor.name});
        if (p > best) {
          best = p;
          s.top_color = name;
        }
      }
      if (best < 0.2) s.top_color = "unknown";
    }
    out.push_back(std::move(s));
  }
  return out;
}

int preimage_valid(const std::vector<Frame>& frames, const BeliefState& b,
                   const FluentEvaluator& eval) {
  int deepest = -1;
  for (size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    const size_t idx =
        std::min<size_t>(f.next_step, f.plan.steps.size());
    const std::vector<Fluent>& pre = f.plan.preimages[idx];
    bool ok = true;
    for (const Fluent& fl : pre) {
      if (!eval(b, fl)) {
        ok = false;
        break;
      }
    }
    if (!ok) break;
    deepest = static_cast<int>(k);
  }
  return deepest;
}

Observation execute_primitive(const Action& action, Simulator& sim) {
  const std::string subject = action_subject(action);
  if (subject.empty() || subject.rfind("_sk", 0) == 0) {
    throw std::logic_error("non-ground action reached execution: " +
                           action_to_string(action));
  }
  return sim.step(action);
}

// --- belief folding -------------------------------------------------------------

namespace {

BeliefState fold_detections(const BeliefState& b, const Detections& dets,
                            const ObservationNoiseModel& noise,
                            BeliefEvents* events) {
  BeliefState cur = b;
  for (const SimDetection& det : dets.items) {
    Detection d;
    d.type = det.type;
    d.pose = det.pose;
    d.hsv = det.hsv;
    AssociationResult res =
        associate_detection(cur, d, noise, noise.association_gate);
    if (events) {
      if (res.is_new) {
        events->new_anchors.push_back(res.anchor);
      } else {
        events->associated.push_back(res.anchor.name);
      }
    }
    cur = std::move(res.belief);
  }
  return cur;
}

// Something believed to sit on the line of sight between the robot and the
// target would explain a missed detection.
bool believed_occluded(const BeliefState& b, const std::string& obj) {
  const ObjectBelief* target = b.object(obj);
  if (!target) return false;
  const Eigen::Vector2d from = b.robot_pose.xy();
  const Eigen::Vector2d to = target->pose_d.xy();
  const double len = (to - from).norm();
  if (len < 1e-9) return false;
  const Eigen::Vector2d dir = (to - from) / len;
  for (const auto& [id, o] : b.objects) {
    if (o.anchor.name == obj) continue;
    if (b.held && *b.held == id) continue;
    const Eigen::Vector2d rel = o.pose_d.xy() - from;
    const double along = rel.dot(dir);
    if (along <= 1e-6 || along >= len - 1e-6) continue;
    const double lateral = std::abs(rel.x() * dir.y() - rel.y() * dir.x());
    if (lateral < 0.1) return true;
  }
  return false;
}

// Looking straight at where an object should be and seeing nothing is
// evidence against its existence there.
void apply_missed_look(BeliefState& b, const std::string& obj,
                       const ObservationNoiseModel& noise) {
  if (b.is_held(obj) || believed_occluded(b, obj)) return;
  for (auto& [id, o] : b.objects) {
    if (o.anchor.name != obj) continue;
    // Floored miss likelihood: a real false negative or two must not erase a
    // plausible object (the existence weight enters the denotation once per
    // conjunct, so it falls fast), while phantom anchors, which never get a
    // confirming hit, still fade within a few looks.
    const double fn = std::max(noise.false_negative_rate * 2.0, 0.2);
    const double dw = std::min(o.detection_weight, 0.99);
    o.detection_weight =
        std::clamp(dw * fn / (dw * fn + (1.0 - dw)), 0.01, 1.0);
  }
}

Eigen::Matrix4d placement_cov() {
  return Eigen::Vector4d(0.03 * 0.03, 0.03 * 0.03, 1e-4, 0.05 * 0.05)
      .asDiagonal();
}

}  // namespace

BeliefState fold_observation(const BeliefState& b, const Action& action,
                             const Observation& obs,
                             const ObservationNoiseModel& noise,
                             BeliefEvents* events) {
  if (const auto* m = std::get_if<MoveBaseAction>(&action)) {
    BeliefState out = b;
    out.robot_pose.mean << m->base_pose.x(), m->base_pose.y(), 0.0,
        wrap_angle(m->base_pose.z());
    out.robot_pose.cov =
        Eigen::Vector4d(1e-4, 1e-4, 1e-6, 1e-4).asDiagonal();
    return out;
  }

  if (std::holds_alternative<LookAction>(action) ||
      std::holds_alternative<LookAtRegionAction>(action)) {
    BeliefState out = b;
    BeliefEvents local;
    if (const auto* dets = std::get_if<Detections>(&obs)) {
      out = fold_detections(out, *dets, noise, &local);
    }
    if (const auto* look = std::get_if<LookAction>(&action)) {
      const bool seen =
          std::find(local.associated.begin(), local.associated.end(),
                    look->obj) != local.associated.end();
      if (!seen) apply_missed_look(out, look->obj, noise);
    }
    if (events) *events = local;
    if (const auto* lr = std::get_if<LookAtRegionAction>(&action)) {
      const Region* reg = out.region(lr->region);
      if (reg) {
        ViewWedge w;
        w.origin = out.robot_pose.xy();
        w.heading = lr->heading;
        const double coverage = Simulator::view_coverage(*reg, w);
        double& conf = out.region_confidence[reg->anchor.id];
        conf = 1.0 - (1.0 - conf) * (1.0 - coverage);
      }
    }
    return out;
  }

  if (const auto* p = std::get_if<PickAction>(&action)) {
    BeliefState out = b;
    if (const auto* w = std::get_if<WeightObs>(&obs)) {
      const ObjectBelief& ob = out.object_or_throw(p->obj);
      out.held = ob.anchor.id;
      out = update_weight(out, p->obj, w->grams, noise);
      // Holding the object settles its existence.
      for (auto& [id, o] : out.objects) {
        if (o.anchor.name == p->obj) o.detection_weight = 1.0;
      }
    } else if (std::holds_alternative<ActionFailed>(obs)) {
      // The grasp target was not where we believed; widen the pose belief so
      // the plan's pose preconditions fail and force another look.
      for (auto& [id, o] : out.objects) {
        if (o.anchor.name == p->obj) o.pose_d.cov *= 4.0;
      }
    }
    return out;
  }

  if (const auto* p = std::get_if<PlaceAction>(&action)) {
    BeliefState out = b;
    if (std::holds_alternative<NullObs>(obs)) {
      out.held.reset();
      for (auto& [id, o] : out.objects) {
        if (o.anchor.name == p->obj) {
          o.pose_d.mean = p->place_pose;
          o.pose_d.mean(3) = wrap_angle(o.pose_d.mean(3));
          o.pose_d.cov = placement_cov();
        }
      }
    }
    return out;
  }

  if (const auto* w = std::get_if<WeighAction>(&action)) {
    if (const auto* wo = std::get_if<WeightObs>(&obs)) {
      return update_weight(b, w->obj, wo->grams, noise);
    }
    return b;
  }

  return b;
}

// --- the loop ------------------------------------------------------------------

namespace {

struct SkolemInfo {
  ExprPtr expr;
};

class Runner {
 public:
  Runner(const BeliefState& belief, const GoalFormula& goal, Simulator& sim,
         const RuleLibrary& lib, const ExecutiveLimits& limits,
         std::uint64_t seed)
      : belief_(belief),
        goal_(goal),
        sim_(sim),
        lib_(lib),
        limits_(limits),
        seed_(seed) {}

  Outcome go() {
    if (goal_holds()) {
      record("done", {{"status", "success"}, {"note", "goal already satisfied"}});
      return finish(RunStatus::Success);
    }
    if (!root_replan("initial")) return finish(RunStatus::PlanningFailure);

    while (true) {
      if (goal_holds()) {
        record("done", {{"status", "success"}});
        return finish(RunStatus::Success);
      }
      if (primitives_ >= limits_.max_primitives) {
        record("done", {{"status", "budget-exhausted"}, {"why", "primitives"}});
        diagnostic_ = "primitive budget exhausted";
        return finish(RunStatus::BudgetExhausted);
      }
      if (replans_ > limits_.max_replans) {
        record("done", {{"status", "budget-exhausted"}, {"why", "replans"}});
        diagnostic_ = "replan budget exhausted";
        return finish(RunStatus::BudgetExhausted);
      }

      Frame& f = frames_.back();
      if (f.next_step >= static_cast<int>(f.plan.steps.size())) {
        if (subgoal_holds(f.plan.goal)) {
          pop_frame("completed");
          if (!frames_.empty()) frames_.back().next_step++;
          else if (!root_replan("root frame completed without goal")) {
            return finish(RunStatus::PlanningFailure);
          }
        } else {
          // Every step ran but the frame's goal still fails: surprise.
          ++replans_;
          pop_frame("goal unmet after execution");
          record("replan", {{"why", "frame goal unmet"}});
          if (frames_.empty() && !root_replan("after unmet frame")) {
            return finish(RunStatus::PlanningFailure);
          }
        }
        continue;
      }

      // Copy: pushes and pops below invalidate references into frames_.
      const RuleInstance inst = f.plan.steps[f.next_step].inst;

      // Steps whose results already hold are discharged without execution.
      if (discharged(inst)) {
        record("infer", {{"rule", inst.signature}, {"how", "results hold"}});
        f.next_step++;
        continue;
      }

      if (inst.physical && f.plan.level >= lib_.params().max_level) {
        try {
          if (!execute_step(inst)) return finish(RunStatus::PlanningFailure);
        } catch (const std::exception& e) {
          diagnostic_ = std::string("simulator fault: ") + e.what();
          record("done", {{"status", "budget-exhausted"}, {"why", diagnostic_}});
          return finish(RunStatus::BudgetExhausted);
        }
        continue;
      }

      if (f.plan.level < lib_.params().max_level) {
        PlanResult r =
            refine(f.plan, f.next_step, belief_, lib_,
                   PlanLimits{lib_.params().max_expansions}, exclusions());
        if (r.plan) {
          frames_.push_back(Frame{std::move(*r.plan), 0});
          register_skolems(frames_.back().plan);
          record("push", {{"plan", frames_.back().plan.render()},
                          {"for", inst.signature}});
        } else {
          fail_step(inst, "refinement found no plan");
          if (frames_.empty() && !root_replan("after refinement failure")) {
            return finish(RunStatus::PlanningFailure);
          }
        }
        continue;
      }

      // Inference step at the deepest level whose promise did not come true.
      fail_step(inst, "inference not dischargeable");
      if (frames_.empty() && !root_replan("after discharge failure")) {
        return finish(RunStatus::PlanningFailure);
      }
    }
  }

 private:
  bool goal_holds() { return holds_goal(belief_, goal_, lib_.evaluator()); }

  bool subgoal_holds(const std::vector<Fluent>& fs) {
    for (const Fluent& fl : fs) {
      if (!lib_.evaluator()(belief_, fl)) return false;
    }
    return true;
  }

  bool discharged(const RuleInstance& inst) {
    if (inst.results.empty()) return false;
    for (const Fluent& r : inst.results) {
      if (!lib_.evaluator()(belief_, r)) return false;
    }
    return true;
  }

  std::vector<std::string> exclusions() const {
    return {excluded_.begin(), excluded_.end()};
  }

  void record(const std::string& kind,
              std::map<std::string, std::string> payload) {
    TraceRecord rec;
    rec.step = static_cast<int>(trace_.size());
    rec.kind = kind;
    rec.payload = std::move(payload);
    rec.belief = belief_summary(belief_);
    rec.stack_depth = static_cast<int>(frames_.size());
    rec.seed = seed_;
    trace_.push_back(std::move(rec));
  }

  Outcome finish(RunStatus status) {
    Outcome out;
    out.status = status;
    out.primitives_used = primitives_;
    out.replans = replans_;
    out.final_belief = belief_;
    out.trace = std::move(trace_);
    out.diagnostic = diagnostic_;
    return out;
  }

  bool root_replan(const std::string& why) {
    frames_.clear();
    GoalFormula g = goal_;
    PlanResult r = plan(belief_, g, 0, lib_,
                        PlanLimits{lib_.params().max_expansions}, exclusions());
    if (!r.plan) {
      diagnostic_ = "no plan for user goal (" + why + "): " + r.failure;
      record("done", {{"status", "planning-failure"}, {"why", diagnostic_}});
      return false;
    }
    frames_.push_back(Frame{std::move(*r.plan), 0});
    register_skolems(frames_.back().plan);
    record("push", {{"plan", frames_.back().plan.render()}, {"why", why}});
    return true;
  }

  void pop_frame(const std::string& reason) {
    record("pop", {{"reason", reason}});
    frames_.pop_back();
  }

  void fail_step(const RuleInstance& inst, const std::string& why) {
    // Remember the failed instance so replanning routes around it until new
    // evidence arrives.
    excluded_.insert(inst.signature);
    ++replans_;
    pop_frame(why + ": " + inst.signature);
    record("replan", {{"why", why}, {"rule", inst.signature}});
  }

  void register_skolems(const Plan& p) {
    for (const PlanStep& s : p.steps) {
      if (s.inst.introduces_skolem && s.inst.expr) {
        skolems_[*s.inst.introduces_skolem] = SkolemInfo{s.inst.expr};
      }
    }
  }

  // --- primitive execution ---

  Eigen::Vector2d believed_position(const std::string& name) const {
    if (const ObjectBelief* ob = belief_.object(name)) return ob->pose_d.xy();
    if (const Region* r = belief_.region(name)) return r->center().head<2>();
    throw std::logic_error("unknown anchor in action: " + name);
  }

  Eigen::Vector2d approach_of(const Eigen::Vector2d& pos) const {
    for (const auto& [id, reg] : belief_.regions) {
      if (reg.contains_xy(pos.x(), pos.y())) return reg.approach.normalized();
    }
    return Eigen::Vector2d(-1.0, 0.0);
  }

  // Fill numeric parameters from the current belief.
  Action aim(const Action& a) const {
    if (const auto* m = std::get_if<MoveBaseAction>(&a)) {
      MoveBaseAction out = *m;
      const Eigen::Vector2d target = believed_position(m->target);
      const Eigen::Vector2d dir = approach_of(target);
      const Eigen::Vector2d base = target + dir * lib_.params().standoff;
      const double heading =
          std::atan2(target.y() - base.y(), target.x() - base.x());
      out.base_pose << base.x(), base.y(), heading;
      return out;
    }
    if (const auto* l = std::get_if<LookAction>(&a)) {
      LookAction out = *l;
      const Eigen::Vector2d target = believed_position(l->obj);
      const Eigen::Vector2d base = belief_.robot_pose.xy();
      out.heading = std::atan2(target.y() - base.y(), target.x() - base.x());
      return out;
    }
    if (const auto* l = std::get_if<LookAtRegionAction>(&a)) {
      LookAtRegionAction out = *l;
      const Eigen::Vector2d target = believed_position(l->region);
      const Eigen::Vector2d base = belief_.robot_pose.xy();
      out.heading = std::atan2(target.y() - base.y(), target.x() - base.x());
      return out;
    }
    if (const auto* p = std::get_if<PickAction>(&a)) {
      PickAction out = *p;
      out.target_pose = belief_.object_or_throw(p->obj).pose_d.mean;
      return out;
    }
    if (const auto* p = std::get_if<PlaceAction>(&a)) {
      PlaceAction out = *p;
      const Region* r = belief_.region(p->region);
      if (!r) throw std::logic_error("place into unknown region " + p->region);
      out.place_pose << r->center().x(), r->center().y(), r->surface_z(), 0.0;
      return out;
    }
    return a;
  }

  bool execute_step(const RuleInstance& inst) {
    const Action action = aim(*inst.action);
    const Observation obs = execute_primitive(action, sim_);
    ++primitives_;
    record("action", {{"action", action_to_string(action)},
                      {"rule", inst.signature}});

    BeliefEvents events;
    belief_ = fold_observation(belief_, action, obs, lib_.noise(), &events);
    excluded_.clear();  // fresh evidence; failed branches may work now

    std::map<std::string, std::string> payload{
        {"observation", observation_to_string(obs)}};
    if (const auto* w = std::get_if<WeightObs>(&obs)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", w->grams);
      payload["grams"] = buf;
      payload["anchor"] = action_subject(action);
    }
    if (const auto* d = std::get_if<Detections>(&obs)) {
      payload["count"] = std::to_string(d->items.size());
    }
    record("observation", std::move(payload));

    for (const Anchor& a : events.new_anchors) {
      record("bind", {{"event", "new-anchor"}, {"anchor", a.name}});
      try_bind_skolems(a);
    }

    frames_.back().next_step++;
    return validate_stack();
  }

  void try_bind_skolems(const Anchor& a) {
    std::vector<int> bound;
    for (const auto& [sk, info] : skolems_) {
      double p = 0.0;
      try {
        p = den_prob(info.expr, a.name, belief_);
      } catch (const std::exception&) {
        continue;
      }
      if (p < lib_.params().den_floor) continue;
      for (Frame& fr : frames_) bind_in_frame(fr, sk, a.name);
      record("bind", {{"skolem", "_sk" + std::to_string(sk) + "_"},
                      {"anchor", a.name}});
      bound.push_back(sk);
    }
    for (int sk : bound) skolems_.erase(sk);
  }

  static void bind_in_frame(Frame& fr, int sk, const std::string& anchor) {
    const Term repl = ConstTerm{anchor};
    const std::string sk_name = "_sk" + std::to_string(sk) + "_";
    for (PlanStep& s : fr.plan.steps) {
      RuleInstance& inst = s.inst;
      for (auto& [pre, lv] : inst.preconds) pre = fluent_bind_skolem(pre, sk, repl);
      for (Fluent& r : inst.results) r = fluent_bind_skolem(r, sk, repl);
      if (inst.obj == sk_name) inst.obj = anchor;
      if (inst.action) {
        if (auto* p = std::get_if<PickAction>(&*inst.action)) {
          if (p->obj == sk_name) p->obj = anchor;
        } else if (auto* pl = std::get_if<PlaceAction>(&*inst.action)) {
          if (pl->obj == sk_name) pl->obj = anchor;
        } else if (auto* lk = std::get_if<LookAction>(&*inst.action)) {
          if (lk->obj == sk_name) lk->obj = anchor;
        } else if (auto* w = std::get_if<WeighAction>(&*inst.action)) {
          if (w->obj == sk_name) w->obj = anchor;
        } else if (auto* mv = std::get_if<MoveBaseAction>(&*inst.action)) {
          if (mv->target == sk_name) mv->target = anchor;
        }
      }
    }
    for (auto& pre : fr.plan.preimages) {
      for (Fluent& fl : pre) fl = fluent_bind_skolem(fl, sk, repl);
    }
    for (Fluent& fl : fr.plan.goal) fl = fluent_bind_skolem(fl, sk, repl);
  }

  bool validate_stack() {
    const int deepest = preimage_valid(frames_, belief_, lib_.evaluator());
    if (deepest == static_cast<int>(frames_.size()) - 1) return true;
    ++replans_;
    while (static_cast<int>(frames_.size()) - 1 > deepest) {
      pop_frame("preimage invalid");
    }
    record("replan", {{"why", "preimage invalidated"},
                      {"kept_frames", std::to_string(frames_.size())}});
    if (frames_.empty()) return root_replan("stack invalidated");
    return true;
  }

  BeliefState belief_;
  GoalFormula goal_;
  Simulator& sim_;
  const RuleLibrary& lib_;
  ExecutiveLimits limits_;
  std::uint64_t seed_;

  std::vector<Frame> frames_;
  Trace trace_;
  std::set<std::string> excluded_;
  std::map<int, SkolemInfo> skolems_;
  int primitives_ = 0;
  int replans_ = 0;
  std::string diagnostic_;
};

}  // namespace

Outcome run(const BeliefState& initial_belief, const GoalFormula& goal,
            Simulator& sim, const RuleLibrary& lib,
            const ExecutiveLimits& limits, std::uint64_t seed) {
  Runner r(initial_belief, goal, sim, lib, limits, seed);
  return r.go();
}

}  // namespace owgp
