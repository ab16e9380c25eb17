#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>

namespace owgp {

// Ground physical operators. Anchor arguments are names; numeric aiming
// parameters (base target, look heading, place point) are filled in by the
// executive from the current belief just before execution.
struct MoveBaseAction {
  std::string target;                       // anchor being approached
  Eigen::Vector3d base_pose = Eigen::Vector3d::Zero();  // x, y, heading
};
struct LookAction {
  std::string obj;
  double heading = 0.0;
};
struct LookAtRegionAction {
  std::string region;
  double heading = 0.0;
};
struct PickAction {
  std::string obj;
  Eigen::Vector4d target_pose = Eigen::Vector4d::Zero();  // believed object pose
};
struct PlaceAction {
  std::string obj;
  std::string region;
  Eigen::Vector4d place_pose = Eigen::Vector4d::Zero();
};
struct WeighAction {
  std::string obj;
};

using Action = std::variant<MoveBaseAction, LookAction, LookAtRegionAction,
                            PickAction, PlaceAction, WeighAction>;

std::string action_to_string(const Action& a);
// The anchor the action is about (target/obj/region).
std::string action_subject(const Action& a);

}  // namespace owgp
