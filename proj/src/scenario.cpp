#include "owgp/scenario.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "owgp/gaussian.h"
#include "owgp/parser.h"

namespace owgp {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(path + "." + key, "missing required field");
  }
  return j.at(key);
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

double prob_at(const json& j, const std::string& path) {
  const double p = number_at(j, path);
  if (p < 0.0 || p > 1.0) throw SchemaError(path, "probability outside [0,1]");
  return p;
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd vector_at(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw SchemaError(path, "expected an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = number_at(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

double opt_number(const json& j, const std::string& key, double fallback,
                  const std::string& path) {
  if (!j.contains(key)) return fallback;
  return number_at(j.at(key), path + "." + key);
}

}  // namespace

Scenario load_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("not valid JSON: ") + e.what());
  }

  Scenario s;
  auto domain = std::make_shared<DomainConfig>();

  // --- vocabulary ---
  const json& types = require(j, "types", "$");
  if (!types.is_array() || types.empty()) {
    throw SchemaError("$.types", "expected a non-empty array");
  }
  for (size_t i = 0; i < types.size(); ++i) {
    domain->types.push_back(string_at(types[i], "$.types[" + std::to_string(i) + "]"));
  }
  const json& colors = require(j, "colors", "$");
  for (auto it = colors.begin(); it != colors.end(); ++it) {
    const std::string path = "$.colors." + it.key();
    HsvBox box;
    const Eigen::VectorXd h = vector_at(require(*it, "h", path), 2, path + ".h");
    const Eigen::VectorXd sv = vector_at(require(*it, "s", path), 2, path + ".s");
    const Eigen::VectorXd vv = vector_at(require(*it, "v", path), 2, path + ".v");
    box.h_lo = h(0); box.h_hi = h(1);
    box.s_lo = sv(0); box.s_hi = sv(1);
    box.v_lo = vv(0); box.v_hi = vv(1);
    domain->colors[it.key()] = box;
  }
  domain->heavy_threshold_g =
      opt_number(j, "heavy_threshold_g", 400.0, "$");

  // --- regions ---
  s.belief.robot_pose.cov = Eigen::Vector4d(1e-4, 1e-4, 1e-6, 1e-4).asDiagonal();
  const json& regions = require(j, "regions", "$");
  if (!regions.is_array()) throw SchemaError("$.regions", "expected an array");
  for (size_t i = 0; i < regions.size(); ++i) {
    const std::string path = "$.regions[" + std::to_string(i) + "]";
    const json& rj = regions[i];
    Region r;
    r.anchor.name = string_at(require(rj, "name", path), path + ".name");
    const json& box = require(rj, "box", path);
    if (!box.is_array() || box.size() != 2) {
      throw SchemaError(path + ".box", "expected [[x,y,z],[x,y,z]]");
    }
    const Eigen::VectorXd lo = vector_at(box[0], 3, path + ".box[0]");
    const Eigen::VectorXd hi = vector_at(box[1], 3, path + ".box[1]");
    r.lo = lo; r.hi = hi;
    if ((hi - lo).minCoeff() <= 0.0) {
      throw SchemaError(path + ".box", "box must have positive extent");
    }
    if (rj.contains("approach")) {
      const Eigen::VectorXd a = vector_at(rj.at("approach"), 2, path + ".approach");
      r.approach = a;
      if (r.approach.norm() < 1e-9) {
        throw SchemaError(path + ".approach", "approach must be a nonzero direction");
      }
    }
    const double prior =
        rj.contains("prior") ? prob_at(rj.at("prior"), path + ".prior") : 0.0;
    const double confidence =
        rj.contains("confidence") ? prob_at(rj.at("confidence"), path + ".confidence") : 0.0;
    domain->region_priors[r.anchor.name] = prior;
    const bool named = r.anchor.name.rfind("_reg", 0) != 0;
    s.belief.add_region(r, confidence, named);
    s.world.tables.push_back(s.belief.region(r.anchor.name) ? *s.belief.region(r.anchor.name) : r);
  }

  // --- noise ---
  const json& noise = j.contains("noise") ? j.at("noise") : json::object();
  ObservationNoiseModel nm =
      ObservationNoiseModel::defaults(static_cast<int>(domain->types.size()));
  {
    const double pose_sd = opt_number(noise, "pose_sd", 0.03, "$.noise");
    const double theta_sd = opt_number(noise, "theta_sd", 0.05, "$.noise");
    nm.pose_obs_cov = Eigen::Vector4d(pose_sd * pose_sd, pose_sd * pose_sd,
                                      pose_sd * pose_sd, theta_sd * theta_sd)
                          .asDiagonal();
    if (noise.contains("color_sd")) {
      const Eigen::VectorXd c = vector_at(noise.at("color_sd"), 3, "$.noise.color_sd");
      nm.color_obs_cov = Eigen::Vector3d(c(0) * c(0), c(1) * c(1), c(2) * c(2)).asDiagonal();
    }
    nm.weight_obs_sigma = opt_number(noise, "weight_log_sd", 0.05, "$.noise");
    if (noise.contains("false_negative_rate")) {
      nm.false_negative_rate =
          prob_at(noise.at("false_negative_rate"), "$.noise.false_negative_rate");
    }
    nm.association_gate =
        opt_number(noise, "association_gate", nm.association_gate, "$.noise");
    const int n = static_cast<int>(domain->types.size());
    const double diag = opt_number(noise, "type_confusion_diag", 0.9, "$.noise");
    if (diag <= 0.0 || diag > 1.0) {
      throw SchemaError("$.noise.type_confusion_diag", "must be in (0,1]");
    }
    nm.type_confusion = Eigen::MatrixXd::Constant(
        n, n, n > 1 ? (1.0 - diag) / (n - 1) : 0.0);
    for (int i = 0; i < n; ++i) nm.type_confusion(i, i) = n > 1 ? diag : 1.0;
  }
  nm.validate(static_cast<int>(domain->types.size()));
  s.noise = nm;

  // --- world ---
  const json& world = require(j, "world", "$");
  const Eigen::VectorXd robot = vector_at(require(world, "robot", "$.world"), 3, "$.world.robot");
  s.world.robot = robot;
  const json& wobjs = require(world, "objects", "$.world");
  if (!wobjs.is_array()) throw SchemaError("$.world.objects", "expected an array");
  for (size_t i = 0; i < wobjs.size(); ++i) {
    const std::string path = "$.world.objects[" + std::to_string(i) + "]";
    const json& oj = wobjs[i];
    TrueObject obj;
    obj.name = string_at(require(oj, "name", path), path + ".name");
    obj.type = string_at(require(oj, "type", path), path + ".type");
    if (domain->type_index(obj.type) < 0) {
      throw SchemaError(path + ".type", "undeclared type " + obj.type);
    }
    obj.pose = vector_at(require(oj, "pose", path), 4, path + ".pose");
    obj.hsv = vector_at(require(oj, "hsv", path), 3, path + ".hsv");
    obj.weight_g = number_at(require(oj, "weight_g", path), path + ".weight_g");
    if (obj.weight_g <= 0.0) throw SchemaError(path + ".weight_g", "must be positive");
    if (s.world.objects.count(obj.name)) {
      throw SchemaError(path + ".name", "duplicate object name " + obj.name);
    }
    s.world.objects[obj.name] = obj;
  }

  // --- initial belief ---
  s.belief.domain = domain;
  s.belief.robot_pose.mean << robot(0), robot(1), 0.0, wrap_angle(robot(2));
  const json& belief = require(j, "belief", "$");
  const json& bobjs = require(belief, "objects", "$.belief");
  if (!bobjs.is_array()) throw SchemaError("$.belief.objects", "expected an array");
  for (size_t i = 0; i < bobjs.size(); ++i) {
    const std::string path = "$.belief.objects[" + std::to_string(i) + "]";
    const json& oj = bobjs[i];
    ObjectBelief ob;
    ob.anchor.name = string_at(require(oj, "anchor", path), path + ".anchor");
    ob.anchor.named_constant = ob.anchor.name.rfind("_o", 0) != 0;
    const std::string world_name =
        string_at(require(oj, "world", path), path + ".world");
    auto wit = s.world.objects.find(world_name);
    if (wit == s.world.objects.end()) {
      throw SchemaError(path + ".world", "no such world object: " + world_name);
    }
    const TrueObject& truth = wit->second;

    const json& tp = require(oj, "type_probs", path);
    double total = 0.0;
    for (const std::string& t : domain->types) ob.type_d.probs[t] = 0.0;
    for (auto it = tp.begin(); it != tp.end(); ++it) {
      if (domain->type_index(it.key()) < 0) {
        throw SchemaError(path + ".type_probs." + it.key(), "undeclared type");
      }
      const double p = prob_at(*it, path + ".type_probs." + it.key());
      ob.type_d.probs[it.key()] = p;
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw SchemaError(path + ".type_probs", "probabilities must sum to 1");
    }

    Eigen::Vector4d pose_mean = truth.pose;
    if (oj.contains("pose_mean")) {
      pose_mean = vector_at(oj.at("pose_mean"), 4, path + ".pose_mean");
    }
    const double pose_sd = opt_number(oj, "pose_sd", 0.1, path);
    const double z_sd = opt_number(oj, "z_sd", 0.02, path);
    const double theta_sd = opt_number(oj, "theta_sd", 0.2, path);
    ob.pose_d.mean = pose_mean;
    ob.pose_d.mean(3) = wrap_angle(ob.pose_d.mean(3));
    ob.pose_d.cov = Eigen::Vector4d(pose_sd * pose_sd, pose_sd * pose_sd,
                                    z_sd * z_sd, theta_sd * theta_sd)
                        .asDiagonal();

    Eigen::Vector3d hsv_mean = truth.hsv;
    if (oj.contains("hsv_mean")) {
      hsv_mean = vector_at(oj.at("hsv_mean"), 3, path + ".hsv_mean");
    }
    Eigen::Vector3d hsv_sd(0.3, 0.3, 0.3);
    if (oj.contains("hsv_sd")) {
      hsv_sd = vector_at(oj.at("hsv_sd"), 3, path + ".hsv_sd");
    }
    ob.color_d.mean = hsv_mean;
    ob.color_d.mean(0) = wrap_unit(ob.color_d.mean(0));
    ob.color_d.cov = Eigen::Vector3d(hsv_sd(0) * hsv_sd(0), hsv_sd(1) * hsv_sd(1),
                                     hsv_sd(2) * hsv_sd(2))
                         .asDiagonal();

    const json& weight = require(oj, "weight", path);
    if (weight.is_string() && weight.get<std::string>() == "prior") {
      ob.weight_d = WeightDistribution::prior();
    } else if (weight.is_object()) {
      ob.weight_d.mu = number_at(require(weight, "mu", path + ".weight"),
                                 path + ".weight.mu");
      ob.weight_d.sigma = number_at(require(weight, "sigma", path + ".weight"),
                                    path + ".weight.sigma");
      if (ob.weight_d.sigma <= 0.0) {
        throw SchemaError(path + ".weight.sigma", "must be positive");
      }
    } else {
      throw SchemaError(path + ".weight", "expected \"prior\" or {mu, sigma}");
    }

    ob.detection_weight = oj.contains("detection_weight")
                              ? prob_at(oj.at("detection_weight"),
                                        path + ".detection_weight")
                              : 1.0;
    if (ob.detection_weight <= 0.0) {
      throw SchemaError(path + ".detection_weight", "must be in (0,1]");
    }
    s.belief.add_object(std::move(ob));
  }

  // --- reliabilities / planner / budgets / sim ---
  if (j.contains("reliabilities")) {
    const json& r = j.at("reliabilities");
    s.planner.r_move = opt_number(r, "move", s.planner.r_move, "$.reliabilities");
    s.planner.r_look = opt_number(r, "look", s.planner.r_look, "$.reliabilities");
    s.planner.r_pick = opt_number(r, "pick", s.planner.r_pick, "$.reliabilities");
    s.planner.r_place = opt_number(r, "place", s.planner.r_place, "$.reliabilities");
    s.planner.r_weigh = opt_number(r, "weigh", s.planner.r_weigh, "$.reliabilities");
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    PlannerParams& pp = s.planner;
    pp.den_floor = opt_number(p, "den_floor", pp.den_floor, "$.planner");
    pp.exists_floor = opt_number(p, "exists_floor", pp.exists_floor, "$.planner");
    pp.exists_default_p = opt_number(p, "exists_default_p", pp.exists_default_p, "$.planner");
    pp.type_certain_kappa = opt_number(p, "type_certain_kappa", pp.type_certain_kappa, "$.planner");
    pp.grasp_pos_sd = opt_number(p, "grasp_pos_sd", pp.grasp_pos_sd, "$.planner");
    pp.grasp_theta_sd = opt_number(p, "grasp_theta_sd", pp.grasp_theta_sd, "$.planner");
    pp.color_known_factor = opt_number(p, "color_known_factor", pp.color_known_factor, "$.planner");
    pp.weight_known_sigma = opt_number(p, "weight_known_sigma", pp.weight_known_sigma, "$.planner");
    pp.look_gain_est = opt_number(p, "look_gain_est", pp.look_gain_est, "$.planner");
    pp.prop_slack = opt_number(p, "prop_slack", pp.prop_slack, "$.planner");
    pp.p_stash = opt_number(p, "p_stash", pp.p_stash, "$.planner");
    pp.standoff = opt_number(p, "standoff", pp.standoff, "$.planner");
    pp.max_expansions = static_cast<int>(opt_number(p, "max_expansions", pp.max_expansions, "$.planner"));
    pp.geom.near_radius = opt_number(p, "near_radius", pp.geom.near_radius, "$.planner");
    pp.geom.clearance_lateral = opt_number(p, "clearance_lateral", pp.geom.clearance_lateral, "$.planner");
    pp.geom.clearance_depth = opt_number(p, "clearance_depth", pp.geom.clearance_depth, "$.planner");
  }
  if (j.contains("budgets")) {
    const json& b = j.at("budgets");
    s.budgets.max_primitives = static_cast<int>(
        opt_number(b, "max_primitives", s.budgets.max_primitives, "$.budgets"));
    s.budgets.max_replans = static_cast<int>(
        opt_number(b, "max_replans", s.budgets.max_replans, "$.budgets"));
  }
  if (j.contains("sim")) {
    const json& sj = j.at("sim");
    s.sim.fov_half_angle = opt_number(sj, "fov_half_angle", s.sim.fov_half_angle, "$.sim");
    s.sim.fov_range = opt_number(sj, "fov_range", s.sim.fov_range, "$.sim");
    s.sim.reach = opt_number(sj, "reach", s.sim.reach, "$.sim");
    s.sim.occlusion_radius = opt_number(sj, "occlusion_radius", s.sim.occlusion_radius, "$.sim");
    s.sim.place_jitter = opt_number(sj, "place_jitter", s.sim.place_jitter, "$.sim");
  }

  // --- goal ---
  s.goal_text = string_at(require(j, "goal", "$"), "$.goal");
  s.domain = domain;
  try {
    s.goal = parse_goal(s.goal_text, *domain);
  } catch (const ParseError& e) {
    throw SchemaError("$.goal", std::string("goal does not parse: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("$", "cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

std::string scenario_to_text(const Scenario& s) {
  json j;
  j["types"] = s.domain->types;
  json colors = json::object();
  for (const auto& [name, box] : s.domain->colors) {
    colors[name] = {{"h", {box.h_lo, box.h_hi}},
                    {"s", {box.s_lo, box.s_hi}},
                    {"v", {box.v_lo, box.v_hi}}};
  }
  j["colors"] = std::move(colors);
  j["heavy_threshold_g"] = s.domain->heavy_threshold_g;

  json regions = json::array();
  for (const auto& [id, r] : s.belief.regions) {
    json rj;
    rj["name"] = r.anchor.name;
    rj["box"] = {{r.lo.x(), r.lo.y(), r.lo.z()}, {r.hi.x(), r.hi.y(), r.hi.z()}};
    rj["approach"] = {r.approach.x(), r.approach.y()};
    auto pit = s.domain->region_priors.find(r.anchor.name);
    rj["prior"] = pit != s.domain->region_priors.end() ? pit->second : 0.0;
    rj["confidence"] = s.belief.confidence_of(r.anchor.name);
    regions.push_back(std::move(rj));
  }
  j["regions"] = std::move(regions);

  json noise;
  noise["pose_sd"] = std::sqrt(s.noise.pose_obs_cov(0, 0));
  noise["theta_sd"] = std::sqrt(s.noise.pose_obs_cov(3, 3));
  noise["color_sd"] = {std::sqrt(s.noise.color_obs_cov(0, 0)),
                       std::sqrt(s.noise.color_obs_cov(1, 1)),
                       std::sqrt(s.noise.color_obs_cov(2, 2))};
  noise["weight_log_sd"] = s.noise.weight_obs_sigma;
  noise["false_negative_rate"] = s.noise.false_negative_rate;
  noise["type_confusion_diag"] = s.noise.type_confusion(0, 0);
  noise["association_gate"] = s.noise.association_gate;
  j["noise"] = std::move(noise);

  json world;
  world["robot"] = {s.world.robot.x(), s.world.robot.y(), s.world.robot.z()};
  json wobjs = json::array();
  for (const auto& [name, o] : s.world.objects) {
    json oj;
    oj["name"] = o.name;
    oj["type"] = o.type;
    oj["pose"] = {o.pose(0), o.pose(1), o.pose(2), o.pose(3)};
    oj["hsv"] = {o.hsv(0), o.hsv(1), o.hsv(2)};
    oj["weight_g"] = o.weight_g;
    wobjs.push_back(std::move(oj));
  }
  world["objects"] = std::move(wobjs);
  j["world"] = std::move(world);

  json belief;
  json bobjs = json::array();
  for (const auto& [id, ob] : s.belief.objects) {
    json oj;
    oj["anchor"] = ob.anchor.name;
    // The belief serialization is explicit; tie each entry back to the world
    // object sharing its initial pose (round-trip keeps the reference).
    std::string world_name;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [wname, wobj] : s.world.objects) {
      const double d = (wobj.pose.head<3>() - ob.pose_d.mean.head<3>()).norm();
      if (d < best) {
        best = d;
        world_name = wname;
      }
    }
    oj["world"] = world_name;
    json tp = json::object();
    for (const auto& [t, p] : ob.type_d.probs) tp[t] = p;
    oj["type_probs"] = std::move(tp);
    oj["pose_mean"] = {ob.pose_d.mean(0), ob.pose_d.mean(1), ob.pose_d.mean(2),
                       ob.pose_d.mean(3)};
    oj["pose_sd"] = std::sqrt(ob.pose_d.cov(0, 0));
    oj["z_sd"] = std::sqrt(ob.pose_d.cov(2, 2));
    oj["theta_sd"] = std::sqrt(ob.pose_d.cov(3, 3));
    oj["hsv_mean"] = {ob.color_d.mean(0), ob.color_d.mean(1), ob.color_d.mean(2)};
    oj["hsv_sd"] = {std::sqrt(ob.color_d.cov(0, 0)), std::sqrt(ob.color_d.cov(1, 1)),
                    std::sqrt(ob.color_d.cov(2, 2))};
    oj["weight"] = {{"mu", ob.weight_d.mu}, {"sigma", ob.weight_d.sigma}};
    oj["detection_weight"] = ob.detection_weight;
    bobjs.push_back(std::move(oj));
  }
  belief["objects"] = std::move(bobjs);
  j["belief"] = std::move(belief);

  j["reliabilities"] = {{"move", s.planner.r_move},
                        {"look", s.planner.r_look},
                        {"pick", s.planner.r_pick},
                        {"place", s.planner.r_place},
                        {"weigh", s.planner.r_weigh}};
  j["planner"] = {{"den_floor", s.planner.den_floor},
                  {"exists_floor", s.planner.exists_floor},
                  {"exists_default_p", s.planner.exists_default_p},
                  {"type_certain_kappa", s.planner.type_certain_kappa},
                  {"grasp_pos_sd", s.planner.grasp_pos_sd},
                  {"grasp_theta_sd", s.planner.grasp_theta_sd},
                  {"color_known_factor", s.planner.color_known_factor},
                  {"weight_known_sigma", s.planner.weight_known_sigma},
                  {"look_gain_est", s.planner.look_gain_est},
                  {"prop_slack", s.planner.prop_slack},
                  {"p_stash", s.planner.p_stash},
                  {"standoff", s.planner.standoff},
                  {"max_expansions", s.planner.max_expansions},
                  {"near_radius", s.planner.geom.near_radius},
                  {"clearance_lateral", s.planner.geom.clearance_lateral},
                  {"clearance_depth", s.planner.geom.clearance_depth}};
  j["budgets"] = {{"max_primitives", s.budgets.max_primitives},
                  {"max_replans", s.budgets.max_replans}};
  j["sim"] = {{"fov_half_angle", s.sim.fov_half_angle},
              {"fov_range", s.sim.fov_range},
              {"reach", s.sim.reach},
              {"occlusion_radius", s.sim.occlusion_radius},
              {"place_jitter", s.sim.place_jitter}};
  j["goal"] = s.goal_text;
  return j.dump(2) + "\n";
}

void apply_rules_file(Scenario& s, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("$", "cannot open rules file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("rules file is not valid JSON: ") + e.what());
  }
  if (j.contains("reliabilities")) {
    const json& r = j.at("reliabilities");
    s.planner.r_move = opt_number(r, "move", s.planner.r_move, "$.reliabilities");
    s.planner.r_look = opt_number(r, "look", s.planner.r_look, "$.reliabilities");
    s.planner.r_pick = opt_number(r, "pick", s.planner.r_pick, "$.reliabilities");
    s.planner.r_place = opt_number(r, "place", s.planner.r_place, "$.reliabilities");
    s.planner.r_weigh = opt_number(r, "weigh", s.planner.r_weigh, "$.reliabilities");
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    s.planner.den_floor = opt_number(p, "den_floor", s.planner.den_floor, "$.planner");
    s.planner.exists_default_p =
        opt_number(p, "exists_default_p", s.planner.exists_default_p, "$.planner");
    s.planner.type_certain_kappa =
        opt_number(p, "type_certain_kappa", s.planner.type_certain_kappa, "$.planner");
  }
}

}  // namespace owgp
