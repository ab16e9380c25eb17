#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "owgp/actions.h"
#include "owgp/anchor.h"
#include "owgp/domain.h"
#include "owgp/rng.h"

namespace owgp {

struct TrueObject {
  std::string name;       // world-side identifier (also used in traces)
  std::string type;
  Eigen::Vector4d pose = Eigen::Vector4d::Zero();   // x, y, z, theta
  Eigen::Vector3d hsv = Eigen::Vector3d::Zero();
  double weight_g = 100.0;
};

struct WorldState {
  std::map<std::string, TrueObject> objects;
  std::vector<Region> tables;                       // resting surfaces
  Eigen::Vector3d robot = Eigen::Vector3d::Zero();  // x, y, heading
  std::optional<std::string> held;
};

struct SimDetection {
  std::string type;
  Eigen::Vector4d pose = Eigen::Vector4d::Zero();
  Eigen::Vector3d hsv = Eigen::Vector3d::Zero();
};

struct Detections { std::vector<SimDetection> items; };
struct WeightObs { double grams = 0.0; };
struct ActionFailed { std::string reason; };
struct NullObs {};

using Observation = std::variant<Detections, WeightObs, ActionFailed, NullObs>;

std::string observation_to_string(const Observation& o);

// Horizontal sensing wedge anchored at the robot base.
struct ViewWedge {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double half_angle = M_PI / 6.0;  // 60 degree field of view
  double range = 2.5;

  bool contains(const Eigen::Vector2d& p) const;
};

struct SimParams {
  double fov_half_angle = M_PI / 6.0;
  double fov_range = 2.5;
  double reach = 0.9;
  double occlusion_radius = 0.06;  // object footprint for line-of-sight
  double place_jitter = 0.02;
  // How far a commanded grasp point may be from the true object. Actions
  // refer to internal anchors, so the gripper resolves targets by position.
  double grasp_radius = 0.15;
};

// Deterministic seeded ground-truth world. One instance per run; the
// executive owns mutation.
class Simulator {
 public:
  Simulator(WorldState world, ObservationNoiseModel noise, DomainConfig domain,
            SimParams params, std::uint64_t seed);

  // Applies a ground action: moves the base, picks, places, or senses.
  // Failures emit ActionFailed and leave the world unchanged.
  Observation step(const Action& action);

  // Noisy detections of unheld, unoccluded objects inside the wedge.
  Detections observe_look(const ViewWedge& view);

  // Fraction of the region footprint currently visible from `view`.
  static double view_coverage(const Region& region, const ViewWedge& view);

  const WorldState& world() const { return world_; }
  ViewWedge wedge_from(double heading) const;
  const SimParams& params() const { return params_; }

 private:
  bool occluded(const std::string& name, const Eigen::Vector2d& from) const;

  WorldState world_;
  ObservationNoiseModel noise_;
  DomainConfig domain_;
  SimParams params_;
  Rng rng_;
};

}  // namespace owgp
