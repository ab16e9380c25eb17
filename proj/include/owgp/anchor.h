#pragma once

#include <Eigen/Dense>
#include <string>

namespace owgp {

enum class AnchorKind { Object, Region };

// Internal name for an object or region the robot believes exists. Generated
// anchors render as _oN_ / _regN_; named constants keep their declared name.
// Names are unique within a run, so identity comparisons go through `name`.
struct Anchor {
  int id = -1;
  AnchorKind kind = AnchorKind::Object;
  std::string name;
  bool named_constant = false;

  bool operator==(const Anchor& o) const { return name == o.name; }
  bool operator!=(const Anchor& o) const { return name != o.name; }
  bool operator<(const Anchor& o) const {
    if (id != o.id) return id < o.id;
    return name < o.name;
  }
};

// Axis-aligned volume used for spatial relations and region search.
struct Region {
  Anchor anchor;
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
  // Unit direction objects in this region are approached from (XY plane).
  Eigen::Vector2d approach = Eigen::Vector2d(-1.0, 0.0);

  double surface_z() const { return lo.z(); }
  Eigen::Vector3d center() const { return 0.5 * (lo + hi); }
  bool contains_xy(double x, double y) const {
    return x >= lo.x() && x <= hi.x() && y >= lo.y() && y <= hi.y();
  }
  bool contains(const Eigen::Vector3d& p) const {
    return contains_xy(p.x(), p.y()) && p.z() >= lo.z() && p.z() <= hi.z();
  }
};

}  // namespace owgp
