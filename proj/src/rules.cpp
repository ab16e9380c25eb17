#include "owgp/rules.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "owgp/gaussian.h"

namespace owgp {

const char* rule_kind_name(RuleKind k) {
  switch (k) {
    case RuleKind::MoveBase: return "MoveBase";
    case RuleKind::Look: return "Look";
    case RuleKind::LookAtRegion: return "LookAtRegion";
    case RuleKind::Pick: return "Pick";
    case RuleKind::Place: return "Place";
    case RuleKind::Weigh: return "Weigh";
    case RuleKind::ExamineObj: return "ExamineObj";
    case RuleKind::FindObj: return "FindObj";
    case RuleKind::LinkType: return "LinkType";
    case RuleKind::LinkColor: return "LinkColor";
    case RuleKind::LinkWeight: return "LinkWeight";
    case RuleKind::ClearApproach: return "ClearApproach";
    case RuleKind::Test: return "Test";
  }
  return "?";
}

bool DeletePattern::matches(const Fluent& f) const {
  switch (kind) {
    case Kind::NearForOther: {
      const auto* p = std::get_if<PropFluent>(&f);
      if (!p || p->kind != PropKind::NearFor) return false;
      return term_to_string(p->t) != arg;
    }
    case Kind::HandEmpty: {
      const auto* p = std::get_if<PropFluent>(&f);
      return p && p->kind == PropKind::HandEmpty;
    }
    case Kind::NotHeldOf: {
      const auto* p = std::get_if<PropFluent>(&f);
      return p && p->kind == PropKind::NotHeld && term_to_string(p->t) == arg;
    }
    case Kind::HoldingOf: {
      const auto* p = std::get_if<PropFluent>(&f);
      return p && p->kind == PropKind::Holding && term_to_string(p->t) == arg;
    }
    case Kind::SpatialOf: {
      const auto* b = std::get_if<BBoolFluent>(&f);
      if (!b) return false;
      const auto* r = std::get_if<RelAtom>(&b->atom);
      if (!r || (r->rel != "on" && r->rel != "in") || r->args.size() != 2) {
        return false;
      }
      return term_to_string(r->args[0]) == arg &&
             term_to_string(r->args[1]) != arg2;
    }
    case Kind::ExactTest: {
      const auto* t = std::get_if<TestFluent>(&f);
      return t && t->name == arg;
    }
  }
  return false;
}

namespace {

std::string skolem_free_signature(const std::string& name,
                                  const std::vector<std::string>& args) {
  std::string s = name + "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    // Normalize skolem names so identical searches match across fresh ids.
    if (args[i].rfind("_sk", 0) == 0) {
      s += "Sk";
    } else {
      s += args[i];
    }
  }
  return s + ")";
}

Fluent bcont(const Term& obj, Quantity q, const Eigen::VectorXd& sigma_diag) {
  BContFluent f;
  f.obj = obj;
  f.q = q;
  f.sigma_diag = sigma_diag;
  f.p = 1.0;  // variance-only bound: the mean clause is disabled
  return f;
}

// Variance obtainable after one identity-model Kalman observation from a
// prior variance v: (1/v + 1/r)^-1. Inverting: to land at `req` after one
// observation the prior must satisfy v <= (1/req - 1/r)^-1. Requests looser
// than the observation noise need no prior constraint.
constexpr double kUnconstrainedVar = 1e12;

double pre_observation_variance(double req, double obs_var) {
  if (req >= obs_var * (1.0 - 1e-9)) return kUnconstrainedVar;
  return 1.0 / (1.0 / req - 1.0 / obs_var);
}

bool any_constrained(const Eigen::VectorXd& v) {
  return (v.array() < kUnconstrainedVar * 0.5).any();
}

struct LookNeeds {
  bool pose = false, color = false, type = false;
  Eigen::VectorXd pose_req, color_req;  // tightest requested variances
  double kappa = 0.0;                   // tightest requested type certainty
};

}  // namespace

double action_cost(const RuleInstance& inst, const BeliefState& b,
                   const PlannerParams& params) {
  auto log_cost = [](double p) {
    return p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity();
  };
  switch (inst.kind) {
    case RuleKind::MoveBase: return log_cost(params.r_move);
    case RuleKind::Look:
    case RuleKind::LookAtRegion: return log_cost(params.r_look);
    case RuleKind::Pick: return log_cost(params.r_pick);
    case RuleKind::Place: return log_cost(params.r_place);
    case RuleKind::Weigh: return log_cost(params.r_weigh);
    case RuleKind::ExamineObj: return log_cost(den_prob(inst.expr, inst.obj, b));
    case RuleKind::FindObj:
      return log_cost(undiscovered_region_mass(b, inst.region));
    case RuleKind::LinkType:
    case RuleKind::LinkColor:
    case RuleKind::LinkWeight:
    case RuleKind::ClearApproach:
      return 0.0;
    case RuleKind::Test: return inst.cost;
  }
  return inst.cost;
}

RuleLibrary::RuleLibrary(std::shared_ptr<const DomainConfig> domain,
                         ObservationNoiseModel noise, PlannerParams params)
    : domain_(std::move(domain)),
      noise_(std::move(noise)),
      params_(params),
      eval_(standard_evaluator(params.geom)) {}

RuleLibrary RuleLibrary::standard(std::shared_ptr<const DomainConfig> domain,
                                  ObservationNoiseModel noise,
                                  PlannerParams params) {
  return RuleLibrary(std::move(domain), std::move(noise), params);
}

RuleLibrary RuleLibrary::for_tests(std::vector<TestSchema> schemas,
                                   FluentEvaluator eval, PlannerParams params) {
  RuleLibrary lib(nullptr, ObservationNoiseModel{}, params);
  lib.standard_ = false;
  lib.test_schemas_ = std::move(schemas);
  lib.eval_ = std::move(eval);
  return lib;
}

void RuleLibrary::instantiate(const BeliefState& belief,
                              const std::vector<Fluent>& subgoal,
                              int& skolem_counter,
                              std::vector<RuleInstance>& out) const {
  if (standard_) {
    instantiate_standard(belief, subgoal, skolem_counter, out);
  } else {
    instantiate_tests(subgoal, out);
  }
  std::sort(out.begin(), out.end(),
            [](const RuleInstance& a, const RuleInstance& b) {
              return a.signature < b.signature;
            });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const RuleInstance& a, const RuleInstance& b) {
                          return a.signature == b.signature;
                        }),
            out.end());
}

void RuleLibrary::instantiate_tests(const std::vector<Fluent>& subgoal,
                                    std::vector<RuleInstance>& out) const {
  std::set<std::string> goal_names;
  for (const Fluent& f : subgoal) {
    if (const auto* t = std::get_if<TestFluent>(&f)) goal_names.insert(t->name);
  }
  for (const TestSchema& s : test_schemas_) {
    bool relevant = false;
    for (const std::string& r : s.results) {
      if (goal_names.count(r)) relevant = true;
    }
    if (!relevant) continue;
    RuleInstance inst;
    inst.kind = RuleKind::Test;
    inst.name = s.name;
    inst.signature = s.name + "()";
    inst.cost = s.cost;
    inst.physical = true;
    for (const auto& [n, lv] : s.preconds) inst.preconds.push_back({TestFluent{n}, lv});
    for (const std::string& n : s.results) inst.results.push_back(TestFluent{n});
    for (const std::string& n : s.deletes) {
      inst.deletes.push_back({DeletePattern::Kind::ExactTest, n, ""});
    }
    out.push_back(std::move(inst));
  }
}

void RuleLibrary::instantiate_standard(const BeliefState& belief,
                                       const std::vector<Fluent>& subgoal,
                                       int& skolem_counter,
                                       std::vector<RuleInstance>& out) const {
  const PlannerParams& pp = params_;
  const Eigen::VectorXd pose_obs_var = noise_.pose_obs_cov.diagonal();
  const Eigen::VectorXd color_obs_var = noise_.color_obs_cov.diagonal();

  // Confusion summary used for the one-look type certainty model.
  double conf_diag = 1.0, conf_off = 0.0;
  if (noise_.type_confusion.rows() > 0) {
    conf_diag = noise_.type_confusion.diagonal().minCoeff();
    for (int i = 0; i < noise_.type_confusion.rows(); ++i) {
      for (int j = 0; j < noise_.type_confusion.cols(); ++j) {
        if (i != j) conf_off = std::max(conf_off, noise_.type_confusion(i, j));
      }
    }
  }

  std::vector<std::string> region_names;
  for (const auto& [id, r] : belief.regions) region_names.push_back(r.anchor.name);
  std::sort(region_names.begin(), region_names.end());

  std::vector<std::string> object_names;
  for (const Anchor& a : belief.object_anchors()) object_names.push_back(a.name);

  // Per-object look demands pooled across the subgoal so a single look
  // instance covers every pose/color/type request for that object.
  std::map<std::string, LookNeeds> look_needs;

  auto note_pose_need = [&](const std::string& obj, const Eigen::VectorXd& req) {
    LookNeeds& n = look_needs[obj];
    if (!n.pose) {
      n.pose = true;
      n.pose_req = req;
    } else {
      n.pose_req = n.pose_req.cwiseMin(req);
    }
  };
  auto note_color_need = [&](const std::string& obj, const Eigen::VectorXd& req) {
    LookNeeds& n = look_needs[obj];
    if (!n.color) {
      n.color = true;
      n.color_req = req;
    } else {
      n.color_req = n.color_req.cwiseMin(req);
    }
  };

  // Place(obj, region): results are every subgoal fluent the placement makes
  // true (its achievable spatial fluents plus the freed gripper). `obj_term`
  // may be a skolem; `binding` carries a goal-variable assignment made by the
  // match.
  auto make_place = [&](const Term& obj_term, const std::string& rn,
                        const Substitution& binding) {
    const std::string obj = term_to_string(obj_term);
    RuleInstance inst;
    inst.kind = RuleKind::Place;
    inst.name = "Place";
    inst.args = {obj, rn};
    inst.signature = skolem_free_signature(inst.name, inst.args);
    inst.binding = binding;
    for (const Fluent& f : subgoal) {
      const Fluent bound = fluent_substitute(f, binding);
      if (const auto* bb2 = std::get_if<BBoolFluent>(&bound)) {
        if (const auto* r2 = std::get_if<RelAtom>(&bb2->atom)) {
          if ((r2->rel == "on" || r2->rel == "in") && r2->args.size() == 2 &&
              term_to_string(r2->args[0]) == obj &&
              term_to_string(r2->args[1]) == rn && bb2->p <= pp.r_place) {
            inst.results.push_back(bound);
          }
        }
      }
      if (const auto* p2 = std::get_if<PropFluent>(&bound)) {
        if (p2->kind == PropKind::HandEmpty) inst.results.push_back(bound);
        if (p2->kind == PropKind::NotHeld && term_to_string(p2->t) == obj) {
          inst.results.push_back(bound);
        }
      }
    }
    inst.preconds.push_back({KrdFluent{obj_term}, 0});
    inst.preconds.push_back({PropFluent{PropKind::Holding, obj_term, 0.0}, 1});
    inst.preconds.push_back(
        {PropFluent{PropKind::NearFor, ConstTerm{rn}, 0.0}, 1});
    inst.deletes.push_back({DeletePattern::Kind::HoldingOf, obj, ""});
    inst.deletes.push_back({DeletePattern::Kind::SpatialOf, obj, rn});
    inst.cost = -std::log(pp.r_place);
    inst.physical = true;
    inst.action = PlaceAction{obj, rn};
    inst.obj = obj;
    inst.region = rn;
    return inst;
  };

  for (const Fluent& f : subgoal) {
    // --- MoveBase from NearFor, ClearApproach from ApproachClear ---
    if (const auto* prop = std::get_if<PropFluent>(&f)) {
      if (prop->kind == PropKind::NearFor && is_const(prop->t)) {
        const std::string target = term_to_string(prop->t);
        RuleInstance inst;
        inst.kind = RuleKind::MoveBase;
        inst.name = "MoveBase";
        inst.args = {target};
        inst.signature = skolem_free_signature(inst.name, inst.args);
        inst.results = {f};
        inst.deletes.push_back({DeletePattern::Kind::NearForOther, target, ""});
        inst.cost = -std::log(pp.r_move);
        inst.physical = true;
        inst.action = MoveBaseAction{target};
        inst.obj = target;
        out.push_back(std::move(inst));
      }
      if (prop->kind == PropKind::ApproachClear && is_const(prop->t) &&
          belief.object(term_to_string(prop->t)) != nullptr) {
        const std::string obj = term_to_string(prop->t);
        const auto blockers = blockers_of(belief, obj, pp.geom);
        if (!blockers.empty()) {
          RuleInstance inst;
          inst.kind = RuleKind::ClearApproach;
          inst.name = "ClearApproach";
          inst.args = {obj};
          inst.signature = skolem_free_signature(inst.name, inst.args);
          inst.results = {f};
          inst.cost = 0.0;
          inst.obj = obj;
          const ObjectBelief& target = belief.object_or_throw(obj);
          const Eigen::Vector2d pos = target.pose_d.xy();
          Eigen::Vector2d approach(-1.0, 0.0);
          for (const auto& [id2, reg2] : belief.regions) {
            if (reg2.contains_xy(pos.x(), pos.y())) {
              approach = reg2.approach.normalized();
              break;
            }
          }
          bool feasible = true;
          for (const std::string& blocker : blockers) {
            // Park the blocker in the nearest region whose center neither
            // re-enters the approach corridor nor lands on the target.
            std::string stash;
            double stash_dist = std::numeric_limits<double>::infinity();
            const Eigen::Vector2d blocker_pos =
                belief.object_or_throw(blocker).pose_d.xy();
            for (const std::string& rn : region_names) {
              const Region* reg = belief.region(rn);
              const Eigen::Vector2d center = reg->center().head<2>();
              const Eigen::Vector2d rel = center - pos;
              const double ahead = rel.dot(approach);
              const double lateral =
                  std::abs(rel.x() * approach.y() - rel.y() * approach.x());
              const bool blocks = ahead > 0.02 &&
                                  ahead < pp.geom.clearance_depth &&
                                  lateral < pp.geom.clearance_lateral;
              if (blocks || rel.norm() < pp.geom.clearance_lateral) continue;
              const double d = (center - blocker_pos).norm();
              if (d < stash_dist) {
                stash_dist = d;
                stash = rn;
              }
            }
            if (stash.empty()) {
              feasible = false;
              break;
            }
            inst.preconds.push_back(
                {BBoolFluent{RelAtom{"in", {ConstTerm{blocker}, ConstTerm{stash}}},
                             pp.p_stash},
                 0});
          }
          if (feasible) out.push_back(std::move(inst));
        }
      }
      if (prop->kind == PropKind::Holding && is_const(prop->t) &&
          belief.object(term_to_string(prop->t)) != nullptr) {
        const std::string obj = term_to_string(prop->t);
        RuleInstance inst;
        inst.kind = RuleKind::Pick;
        inst.name = "Pick";
        inst.args = {obj};
        inst.signature = skolem_free_signature(inst.name, inst.args);
        inst.results = {f};
        inst.preconds.push_back({KrdFluent{ConstTerm{obj}}, 0});
        inst.preconds.push_back({PropFluent{PropKind::HandEmpty, {}, 0.0}, 1});
        inst.preconds.push_back(
            {PropFluent{PropKind::NearFor, ConstTerm{obj}, 0.0}, 1});
        inst.preconds.push_back(
            {PropFluent{PropKind::ApproachClear, ConstTerm{obj}, 0.0}, 1});
        Eigen::VectorXd grasp(4);
        grasp << pp.grasp_pos_sd * pp.grasp_pos_sd,
            pp.grasp_pos_sd * pp.grasp_pos_sd, pp.grasp_pos_sd * pp.grasp_pos_sd,
            pp.grasp_theta_sd * pp.grasp_theta_sd;
        inst.preconds.push_back({bcont(ConstTerm{obj}, Quantity::Pose, grasp), 1});
        inst.deletes.push_back({DeletePattern::Kind::HandEmpty, "", ""});
        inst.deletes.push_back({DeletePattern::Kind::NotHeldOf, obj, ""});
        inst.deletes.push_back({DeletePattern::Kind::SpatialOf, obj, ""});
        inst.cost = -std::log(pp.r_pick);
        inst.physical = true;
        inst.action = PickAction{obj};
        inst.obj = obj;
        out.push_back(std::move(inst));
      }
      if ((prop->kind == PropKind::HandEmpty ||
           (prop->kind == PropKind::NotHeld && is_const(prop->t)))) {
        // Putting down the currently held object achieves these. Mid-plan
        // re-placements are always driven by a spatial fluent that is part of
        // the same subgoal, so that trigger covers them.
        std::string held_name;
        if (belief.held) {
          auto it = belief.objects.find(*belief.held);
          if (it != belief.objects.end()) held_name = it->second.anchor.name;
        }
        if (!held_name.empty() &&
            (prop->kind == PropKind::HandEmpty ||
             term_to_string(prop->t) == held_name)) {
          for (const std::string& rn : region_names) {
            out.push_back(make_place(ConstTerm{held_name}, rn, {}));
          }
        }
      }
      if (prop->kind == PropKind::TypeCertain && is_const(prop->t) &&
          belief.object(term_to_string(prop->t)) != nullptr) {
        LookNeeds& n = look_needs[term_to_string(prop->t)];
        n.type = true;
        n.kappa = std::max(n.kappa, prop->param);
      }
      continue;
    }

    // --- Look / Weigh from continuous belief fluents ---
    if (const auto* c = std::get_if<BContFluent>(&f)) {
      if (!is_const(c->obj)) continue;
      const std::string obj = term_to_string(c->obj);
      if (belief.object(obj) == nullptr) continue;
      if (c->q == Quantity::Pose) note_pose_need(obj, c->sigma_diag);
      if (c->q == Quantity::Color) note_color_need(obj, c->sigma_diag);
      if (c->q == Quantity::Weight) {
        RuleInstance inst;
        inst.kind = RuleKind::Weigh;
        inst.name = "Weigh";
        inst.args = {obj};
        inst.signature = skolem_free_signature(inst.name, inst.args);
        inst.results = {f};
        inst.preconds.push_back({KrdFluent{ConstTerm{obj}}, 0});
        inst.preconds.push_back(
            {PropFluent{PropKind::Holding, ConstTerm{obj}, 0.0}, 1});
        const double req = c->sigma_diag(0);
        const double obs_var = noise_.weight_obs_sigma * noise_.weight_obs_sigma;
        const double pre = pre_observation_variance(req, obs_var);
        if (pre < kUnconstrainedVar * 0.5) {
          inst.preconds.push_back(
              {bcont(ConstTerm{obj}, Quantity::Weight,
                     Eigen::VectorXd::Constant(1, pre)),
               0});
        }
        inst.cost = -std::log(pp.r_weigh);
        inst.physical = true;
        inst.action = WeighAction{obj};
        inst.obj = obj;
        out.push_back(std::move(inst));
      }
      continue;
    }

    // --- BContents from LookAtRegion ---
    if (const auto* bc = std::get_if<BContentsFluent>(&f)) {
      if (belief.region(bc->region) == nullptr) continue;
      RuleInstance inst;
      inst.kind = RuleKind::LookAtRegion;
      inst.name = "LookAtRegion";
      inst.args = {bc->region};
      inst.signature = skolem_free_signature(inst.name, inst.args);
      inst.results = {f};
      inst.preconds.push_back(
          {PropFluent{PropKind::NearFor, ConstTerm{bc->region}, 0.0}, 1});
      // Confidence obtainable in one look: 1 - (1-c)(1-gain). Inverting
      // gives the confidence required beforehand.
      const double pre_conf = 1.0 - (1.0 - bc->p) / (1.0 - pp.look_gain_est);
      if (pre_conf > 0.0) {
        inst.preconds.push_back({BContentsFluent{bc->region, pre_conf}, 0});
      }
      inst.cost = -std::log(pp.r_look);
      inst.physical = true;
      inst.action = LookAtRegionAction{bc->region};
      inst.region = bc->region;
      out.push_back(std::move(inst));
      continue;
    }

    // --- denotation fluents: ExamineObj / FindObj; property fluents: links;
    //     spatial fluents: Place ---
    if (const auto* bb = std::get_if<BBoolFluent>(&f)) {
      if (const auto* den = std::get_if<DenAtom>(&bb->atom)) {
        const PropsForResult props = props_for(den->expr, *domain_);
        // ExamineObj candidates: the named object, or every known object when
        // the referent is still a goal variable.
        if (props.props) {
          std::vector<std::string> candidates;
          if (is_const(den->obj)) {
            candidates = {term_to_string(den->obj)};
          } else if (is_variable(den->obj)) {
            candidates = object_names;
          }
          for (const std::string& obj : candidates) {
            if (belief.object(obj) == nullptr) continue;
            const double p_prior = den_prob(den->expr, obj, belief);
            if (p_prior < pp.den_floor) continue;  // implausible referent
            RuleInstance inst;
            inst.kind = RuleKind::ExamineObj;
            inst.name = "ExamineObj";
            inst.args = {expr_to_string(den->expr), obj};
            inst.signature = skolem_free_signature(inst.name, inst.args);
            inst.expr = den->expr;
            inst.obj = obj;
            if (is_variable(den->obj)) {
              inst.binding.bindings[std::get<Variable>(den->obj).name] =
                  ConstTerm{obj};
            }
            inst.results.push_back(
                BBoolFluent{DenAtom{den->expr, ConstTerm{obj}}, bb->p});
            inst.results.push_back(KrdFluent{ConstTerm{obj}});
            inst.preconds.push_back(
                {BBoolFluent{DenAtom{den->expr, ConstTerm{obj}}, pp.den_floor},
                 0});
            const size_t nprops = props.props->rels.size();
            if (nprops > 0) {
              const double per_prop =
                  std::pow(pp.prop_slack * bb->p, 1.0 / nprops);
              for (const auto& [dim, rel] : props.props->rels) {
                inst.preconds.push_back(
                    {BBoolFluent{RelAtom{rel, {ConstTerm{obj}}}, per_prop}, 1});
              }
            }
            inst.cost = -std::log(p_prior);
            out.push_back(std::move(inst));
          }
        }
        // FindObj: search a region for a not-yet-known object.
        if (!is_const(den->obj)) {
          for (const std::string& rn : region_names) {
            const double mass = undiscovered_region_mass(belief, rn);
            if (mass < pp.exists_floor) continue;  // region exhausted
            RuleInstance inst;
            inst.kind = RuleKind::FindObj;
            inst.name = "FindObj";
            const int sk = skolem_counter++;
            inst.args = {expr_to_string(den->expr), rn, "_sk" + std::to_string(sk) + "_"};
            inst.signature = skolem_free_signature(inst.name, inst.args);
            inst.expr = den->expr;
            inst.region = rn;
            inst.introduces_skolem = sk;
            Term sk_term = SkolemTerm{sk};
            if (is_variable(den->obj)) {
              inst.binding.bindings[std::get<Variable>(den->obj).name] = sk_term;
            } else {
              sk_term = den->obj;  // already a skolem: reuse it
              inst.introduces_skolem = std::get<SkolemTerm>(den->obj).id;
            }
            inst.results.push_back(BBoolFluent{DenAtom{den->expr, sk_term}, bb->p});
            inst.results.push_back(KrdFluent{sk_term});
            inst.preconds.push_back({BContentsFluent{rn, bb->p}, 0});
            inst.preconds.push_back(
                {BExistsInFluent{den->expr, rn, pp.exists_default_p}, 0});
            inst.cost = mass > 0.0 ? -std::log(mass)
                                   : std::numeric_limits<double>::infinity();
            out.push_back(std::move(inst));
          }
        }
        continue;
      }

      const auto& rel = std::get<RelAtom>(bb->atom);
      const auto kind = domain_ ? domain_->relation_kind(rel.rel) : std::nullopt;
      if (!kind) continue;

      // Spatial results come from Place. Variable objects enumerate every
      // known anchor plus a fresh skolem (a placement of something still to
      // be found); skolem objects instantiate directly.
      if ((*kind == RelationKind::On || *kind == RelationKind::In) &&
          rel.args.size() == 2 && is_const(rel.args[1]) && bb->p <= pp.r_place) {
        const std::string rn = term_to_string(rel.args[1]);
        if (belief.region(rn) == nullptr) continue;
        if (is_const(rel.args[0])) {
          if (belief.object(term_to_string(rel.args[0]))) {
            out.push_back(make_place(rel.args[0], rn, {}));
          }
        } else if (is_variable(rel.args[0])) {
          const std::string var = std::get<Variable>(rel.args[0]).name;
          for (const std::string& obj : object_names) {
            Substitution binding;
            binding.bindings[var] = ConstTerm{obj};
            out.push_back(make_place(ConstTerm{obj}, rn, binding));
          }
          Substitution binding;
          const Term sk = SkolemTerm{skolem_counter++};
          binding.bindings[var] = sk;
          out.push_back(make_place(sk, rn, binding));
        } else {
          out.push_back(make_place(rel.args[0], rn, {}));
        }
        continue;
      }

      // Property links connect symbolic relations to observable dimensions.
      if (rel.args.size() == 1 && is_const(rel.args[0])) {
        const std::string obj = term_to_string(rel.args[0]);
        if (belief.object(obj) == nullptr) continue;
        if (*kind == RelationKind::Type && conf_off < conf_diag) {
          RuleInstance inst;
          inst.kind = RuleKind::LinkType;
          inst.name = "LinkType";
          inst.args = {rel.rel, obj};
          inst.signature = skolem_free_signature(inst.name, inst.args);
          inst.results = {f};
          inst.preconds.push_back(
              {PropFluent{PropKind::TypeCertain, ConstTerm{obj},
                          pp.type_certain_kappa},
               0});
          inst.obj = obj;
          out.push_back(std::move(inst));
        } else if (*kind == RelationKind::Color) {
          RuleInstance inst;
          inst.kind = RuleKind::LinkColor;
          inst.name = "LinkColor";
          inst.args = {rel.rel, obj};
          inst.signature = skolem_free_signature(inst.name, inst.args);
          inst.results = {f};
          inst.preconds.push_back(
              {bcont(ConstTerm{obj}, Quantity::Color,
                     color_obs_var * pp.color_known_factor),
               0});
          inst.obj = obj;
          out.push_back(std::move(inst));
        } else if (*kind == RelationKind::Heavy) {
          RuleInstance inst;
          inst.kind = RuleKind::LinkWeight;
          inst.name = "LinkWeight";
          inst.args = {rel.rel, obj};
          inst.signature = skolem_free_signature(inst.name, inst.args);
          inst.results = {f};
          inst.preconds.push_back(
              {bcont(ConstTerm{obj}, Quantity::Weight,
                     Eigen::VectorXd::Constant(
                         1, pp.weight_known_sigma * pp.weight_known_sigma)),
               0});
          inst.obj = obj;
          out.push_back(std::move(inst));
        }
      }
      continue;
    }
  }

  // One Look instance per object covering all pooled demands in this subgoal.
  for (const auto& [obj, needs] : look_needs) {
    RuleInstance inst;
    inst.kind = RuleKind::Look;
    inst.name = "Look";
    inst.args = {obj};
    inst.signature = skolem_free_signature(inst.name, inst.args);
    inst.obj = obj;
    inst.cost = -std::log(pp.r_look);
    inst.physical = true;
    inst.action = LookAction{obj};
    inst.preconds.push_back(
        {PropFluent{PropKind::NearFor, ConstTerm{obj}, 0.0}, 1});
    inst.preconds.push_back(
        {PropFluent{PropKind::NotHeld, ConstTerm{obj}, 0.0}, 1});
    inst.preconds.push_back(
        {PropFluent{PropKind::ApproachClear, ConstTerm{obj}, 0.0}, 1});
    // Results are exactly the subgoal fluents this look satisfies; chained
    // variance preconditions encode "one more observation than that".
    for (const Fluent& f : subgoal) {
      if (const auto* c = std::get_if<BContFluent>(&f)) {
        if (is_const(c->obj) && term_to_string(c->obj) == obj &&
            (c->q == Quantity::Pose || c->q == Quantity::Color)) {
          inst.results.push_back(f);
        }
      }
      if (const auto* p = std::get_if<PropFluent>(&f)) {
        if (p->kind == PropKind::TypeCertain && is_const(p->t) &&
            term_to_string(p->t) == obj) {
          inst.results.push_back(f);
        }
      }
    }
    if (needs.pose) {
      Eigen::VectorXd pre(needs.pose_req.size());
      for (int i = 0; i < pre.size(); ++i) {
        pre(i) = pre_observation_variance(needs.pose_req(i), pose_obs_var(i));
      }
      if (any_constrained(pre)) {
        inst.preconds.push_back({bcont(ConstTerm{obj}, Quantity::Pose, pre), 0});
      }
    }
    if (needs.color) {
      Eigen::VectorXd pre(needs.color_req.size());
      for (int i = 0; i < pre.size(); ++i) {
        pre(i) = pre_observation_variance(needs.color_req(i), color_obs_var(i));
      }
      if (any_constrained(pre)) {
        inst.preconds.push_back({bcont(ConstTerm{obj}, Quantity::Color, pre), 0});
      }
    }
    if (needs.type) {
      // One confirming observation lifts max type probability from p to
      // d*p / (d*p + e*(1-p)); invert to get the certainty needed beforehand.
      const double kappa = needs.kappa;
      const double denom = conf_diag * (1.0 - kappa) + kappa * conf_off;
      const double pre = denom > 0.0 ? kappa * conf_off / denom : 0.0;
      const int n_types = static_cast<int>(domain_->types.size());
      const double floor = n_types > 0 ? 1.0 / n_types : 0.0;
      if (pre > floor + 1e-9) {
        inst.preconds.push_back(
            {PropFluent{PropKind::TypeCertain, ConstTerm{obj}, pre}, 0});
      }
    }
    out.push_back(std::move(inst));
  }
}

}  // namespace owgp
