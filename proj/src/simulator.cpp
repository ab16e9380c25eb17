#include "owgp/simulator.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "owgp/gaussian.h"

namespace owgp {

std::string observation_to_string(const Observation& o) {
  struct Printer {
    std::string operator()(const Detections& d) const {
      return "detections(" + std::to_string(d.items.size()) + ")";
    }
    std::string operator()(const WeightObs& w) const {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "weight(%.1fg)", w.grams);
      return buf;
    }
    std::string operator()(const ActionFailed& f) const {
      return "failed(" + f.reason + ")";
    }
    std::string operator()(const NullObs&) const { return "null"; }
  };
  return std::visit(Printer{}, o);
}

bool ViewWedge::contains(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d d = p - origin;
  const double dist = d.norm();
  if (dist > range) return false;
  if (dist < 1e-9) return true;
  const double ang = std::atan2(d.y(), d.x());
  return std::abs(wrap_angle(ang - heading)) <= half_angle;
}

Simulator::Simulator(WorldState world, ObservationNoiseModel noise,
                     DomainConfig domain, SimParams params, std::uint64_t seed)
    : world_(std::move(world)),
      noise_(std::move(noise)),
      domain_(std::move(domain)),
      params_(params),
      rng_(seed) {
  noise_.validate(static_cast<int>(domain_.types.size()));
}

ViewWedge Simulator::wedge_from(double heading) const {
  ViewWedge w;
  w.origin = world_.robot.head<2>();
  w.heading = heading;
  w.half_angle = params_.fov_half_angle;
  w.range = params_.fov_range;
  return w;
}

bool Simulator::occluded(const std::string& name,
                         const Eigen::Vector2d& from) const {
  const Eigen::Vector2d target = world_.objects.at(name).pose.head<2>();
  const Eigen::Vector2d seg = target - from;
  const double len = seg.norm();
  if (len < 1e-9) return false;
  const Eigen::Vector2d dir = seg / len;
  for (const auto& [other_name, obj] : world_.objects) {
    if (other_name == name) continue;
    if (world_.held && *world_.held == other_name) continue;
    const Eigen::Vector2d rel = obj.pose.head<2>() - from;
    const double along = rel.dot(dir);
    if (along <= 1e-9 || along >= len - 1e-9) continue;
    const double lateral = std::abs(rel.x() * dir.y() - rel.y() * dir.x());
    if (lateral < params_.occlusion_radius) return true;
  }
  return false;
}

Detections Simulator::observe_look(const ViewWedge& view) {
  Detections out;
  for (const auto& [name, obj] : world_.objects) {
    if (world_.held && *world_.held == name) continue;  // in the gripper
    if (!view.contains(obj.pose.head<2>())) continue;
    if (occluded(name, view.origin)) continue;
    if (rng_.uniform() < noise_.false_negative_rate) continue;

    SimDetection det;
    const int ti = domain_.type_index(obj.type);
    if (ti < 0) throw std::logic_error("world object with undeclared type: " + obj.type);
    std::vector<double> row(domain_.types.size());
    for (size_t j = 0; j < row.size(); ++j) row[j] = noise_.type_confusion(ti, j);
    det.type = domain_.types[rng_.categorical(row.data(), static_cast<int>(row.size()))];

    const Eigen::Vector4d psd = noise_.pose_obs_cov.diagonal().cwiseSqrt();
    for (int i = 0; i < 4; ++i) det.pose(i) = obj.pose(i) + psd(i) * rng_.normal();
    det.pose(3) = wrap_angle(det.pose(3));

    const Eigen::Vector3d csd = noise_.color_obs_cov.diagonal().cwiseSqrt();
    for (int i = 0; i < 3; ++i) det.hsv(i) = obj.hsv(i) + csd(i) * rng_.normal();
    det.hsv(0) = wrap_unit(det.hsv(0));
    det.hsv(1) = std::clamp(det.hsv(1), 0.0, 1.0);
    det.hsv(2) = std::clamp(det.hsv(2), 0.0, 1.0);

    out.items.push_back(std::move(det));
  }
  return out;
}

double Simulator::view_coverage(const Region& region, const ViewWedge& view) {
  constexpr int kGrid = 24;
  int inside = 0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double x = region.lo.x() +
                       (region.hi.x() - region.lo.x()) * (i + 0.5) / kGrid;
      const double y = region.lo.y() +
                       (region.hi.y() - region.lo.y()) * (j + 0.5) / kGrid;
      if (view.contains({x, y})) ++inside;
    }
  }
  return static_cast<double>(inside) / (kGrid * kGrid);
}

Observation Simulator::step(const Action& action) {
  if (const auto* m = std::get_if<MoveBaseAction>(&action)) {
    world_.robot = m->base_pose;
    return NullObs{};
  }

  if (const auto* l = std::get_if<LookAction>(&action)) {
    return observe_look(wedge_from(l->heading));
  }
  if (const auto* l = std::get_if<LookAtRegionAction>(&action)) {
    return observe_look(wedge_from(l->heading));
  }

  // Manipulation resolves targets by commanded position: action anchors are
  // internal belief names with no meaning to the world.
  if (const auto* p = std::get_if<PickAction>(&action)) {
    if (world_.held) return ActionFailed{"gripper occupied"};
    const Eigen::Vector2d aim = p->target_pose.head<2>();
    if (!aim.allFinite()) throw std::invalid_argument("malformed pick target");
    std::string best_name;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [name, obj] : world_.objects) {
      const double d = (obj.pose.head<2>() - aim).norm();
      if (d < best) {
        best = d;
        best_name = name;
      }
    }
    if (best_name.empty() || best > params_.grasp_radius) {
      return ActionFailed{"nothing to grasp"};
    }
    const Eigen::Vector2d base = world_.robot.head<2>();
    const Eigen::Vector2d target = world_.objects.at(best_name).pose.head<2>();
    if ((target - base).norm() > params_.reach) {
      return ActionFailed{"out of reach"};
    }
    const double heading = std::atan2(aim.y() - base.y(), aim.x() - base.x());
    if (!wedge_from(heading).contains(target)) {
      return ActionFailed{"not in view"};
    }
    world_.held = best_name;
    // Grasping yields a (noisy) wrist-load weight reading.
    const double w = world_.objects.at(best_name).weight_g *
                     std::exp(noise_.weight_obs_sigma * rng_.normal());
    return WeightObs{w};
  }

  if (const auto* p = std::get_if<PlaceAction>(&action)) {
    if (!world_.held) return ActionFailed{"gripper empty"};
    const Region* region = nullptr;
    for (const Region& r : world_.tables) {
      if (r.anchor.name == p->region) region = &r;
    }
    if (!region) return ActionFailed{"unknown region " + p->region};
    const Eigen::Vector2d base = world_.robot.head<2>();
    if ((p->place_pose.head<2>() - base).norm() > params_.reach) {
      return ActionFailed{"region out of reach"};
    }
    TrueObject& obj = world_.objects.at(*world_.held);
    double x = p->place_pose.x() + params_.place_jitter * rng_.normal();
    double y = p->place_pose.y() + params_.place_jitter * rng_.normal();
    // The release always ends up on the surface, inside the target box.
    x = std::clamp(x, region->lo.x() + 0.02, region->hi.x() - 0.02);
    y = std::clamp(y, region->lo.y() + 0.02, region->hi.y() - 0.02);
    obj.pose << x, y, region->surface_z(), wrap_angle(p->place_pose(3));
    world_.held.reset();
    return NullObs{};
  }

  if (std::holds_alternative<WeighAction>(action)) {
    if (!world_.held) return ActionFailed{"gripper empty"};
    const double grams = world_.objects.at(*world_.held).weight_g *
                         std::exp(noise_.weight_obs_sigma * rng_.normal());
    return WeightObs{grams};
  }

  throw std::invalid_argument("malformed action");
}

}  // namespace owgp
