#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace owgp {

// Axis-aligned box in HSV space. Hue is circular: h_lo > h_hi means the hue
// interval crosses zero (e.g. red).
struct HsvBox {
  double h_lo = 0.0, h_hi = 1.0;
  double s_lo = 0.0, s_hi = 1.0;
  double v_lo = 0.0, v_hi = 1.0;

  bool contains(const Eigen::Vector3d& hsv) const;
};

enum class RelationKind { Type, Color, Heavy, On, In, Any };

// Fixed vocabulary for a run: object types, color volumes, the weight
// threshold, and which relation names map to which property dimension.
struct DomainConfig {
  std::vector<std::string> types;
  std::map<std::string, HsvBox> colors;
  double heavy_threshold_g = 400.0;
  // Scenario-configured prior that an object satisfying a searched-for
  // description lies in a given region, keyed by region name.
  std::map<std::string, double> region_priors;

  int type_index(const std::string& t) const;
  bool is_type(const std::string& rel) const;
  bool is_color(const std::string& rel) const;
  // Relation lookup over the full vocabulary; nullopt for unknown names.
  std::optional<RelationKind> relation_kind(const std::string& rel) const;
  int arity(RelationKind k) const { return (k == RelationKind::On || k == RelationKind::In) ? 2 : 1; }

  static DomainConfig defaults();
};

// Sensor model shared by the belief updates and the simulator.
struct ObservationNoiseModel {
  // Row i = true type i, column j = probability of reporting type j.
  Eigen::MatrixXd type_confusion;
  Eigen::Matrix4d pose_obs_cov = Eigen::Matrix4d::Identity();
  Eigen::Matrix3d color_obs_cov = Eigen::Matrix3d::Identity();
  double weight_obs_sigma = 0.05;  // log-space
  double false_negative_rate = 0.0;
  // Mahalanobis distance on (x, y, z) below which a detection is matched to
  // an existing object instead of spawning a new anchor.
  double association_gate = 3.0;

  void validate(int n_types) const;  // throws std::invalid_argument
  static ObservationNoiseModel defaults(int n_types);
};

}  // namespace owgp
