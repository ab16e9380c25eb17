#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "owgp/anchor.h"
#include "owgp/domain.h"

namespace owgp {

struct TypeDistribution {
  // Probability per type name; support is the domain's fixed type set.
  std::map<std::string, double> probs;

  double prob(const std::string& t) const;
  std::string map_type() const;     // argmax, ties by name
  double max_prob() const;
  void normalize();                 // throws if total mass is zero
  static TypeDistribution uniform(const std::vector<std::string>& types);
  static TypeDistribution delta(const std::string& t,
                                const std::vector<std::string>& types);
};

struct PoseDistribution {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();   // x, y, z, theta
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();

  Eigen::Vector2d xy() const { return mean.head<2>(); }
  static PoseDistribution at(double x, double y, double z, double theta,
                             double pos_sd, double theta_sd);
};

struct ColorDistribution {
  Eigen::Vector3d mean = Eigen::Vector3d(0.5, 0.5, 0.5);  // h, s, v; hue circular
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity() * 0.09;
};

struct WeightDistribution {
  double mu = 0.0;      // mean of log-weight (log grams)
  double sigma = 1.0;   // std of log-weight

  double median_grams() const { return std::exp(mu); }
  double prob_at_least(double grams) const;
  // Broad prior for an arbitrary tabletop object.
  static WeightDistribution prior() { return {std::log(250.0), 1.0}; }
};

struct ObjectBelief {
  Anchor anchor;
  TypeDistribution type_d;
  PoseDistribution pose_d;
  ColorDistribution color_d;
  WeightDistribution weight_d;
  double detection_weight = 1.0;  // P that the object exists, in (0,1]
};

struct Detection {
  std::string type;
  Eigen::Vector4d pose = Eigen::Vector4d::Zero();
  Eigen::Vector3d hsv = Eigen::Vector3d::Zero();
};

// Object-centric probabilistic state. A value type: every update returns a
// fresh state and leaves its input untouched, so states can be shared
// read-only across threads.
struct BeliefState {
  std::shared_ptr<const DomainConfig> domain;
  std::map<int, ObjectBelief> objects;          // keyed by anchor id
  std::map<int, Region> regions;                // keyed by anchor id
  std::map<int, double> region_confidence;      // how well contents are known
  PoseDistribution robot_pose;
  std::optional<int> held;                      // anchor id of grasped object
  int next_anchor_id = 1;                       // global id counter
  int next_object_index = 1;                    // numbering for _oN_ names

  // --- anchors ---
  std::optional<Anchor> find_anchor(const std::string& name) const;
  const ObjectBelief* object(const std::string& name) const;
  const ObjectBelief& object_or_throw(const std::string& name) const;
  const Region* region(const std::string& name) const;
  bool is_held(const std::string& name) const;
  Anchor add_object(ObjectBelief b);            // assigns _oN_ if unnamed
  Anchor add_region(Region r, double confidence, bool named);
  std::vector<Anchor> object_anchors() const;   // ordered by id

  double confidence_of(const std::string& region_name) const;
};

// --- core queries -----------------------------------------------------------

// True iff the equi-probability contours of s1 fit inside those of s2,
// i.e. s2 - s1 is PSD.
bool cov_dominates(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2,
                   double tol = 1e-9);

// b(R(c1,...,cn)): probability of a ground relation under the belief,
// weighted by the detection weight of each object argument. Args are anchor
// names. Throws on unknown relation/anchor or arity mismatch.
double prob_ground_relation(const BeliefState& b, const std::string& rel,
                            const std::vector<std::string>& args);

// Same, conditioned on the object arguments existing (no detection-weight
// product).
double prob_ground_relation_given_exists(const BeliefState& b,
                                         const std::string& rel,
                                         const std::vector<std::string>& args);

enum class Quantity { Pose, Color, Weight };

// B(phi, mu, Sigma, Delta, p): the belief about a Gaussian quantity is within
// Delta of mu componentwise, at least as certain as Sigma, and p >= the
// mixture weight. Empty mu/delta disables the mean clause.
bool holds_cont_fluent(const BeliefState& b, const std::string& obj,
                       Quantity q, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& sigma,
                       const Eigen::VectorXd& delta, double p);

// Gaussian summary (mean, cov, mixture weight) of a believed quantity.
void cont_belief_params(const BeliefState& b, const std::string& obj,
                        Quantity q, Eigen::VectorXd& mean,
                        Eigen::MatrixXd& cov, double& weight);

// --- measurement updates (all pure) ----------------------------------------

BeliefState update_type(const BeliefState& b, const std::string& obj,
                        const std::string& observed_type,
                        const ObservationNoiseModel& noise);
BeliefState update_pose(const BeliefState& b, const std::string& obj,
                        const Eigen::Vector4d& observed_pose,
                        const ObservationNoiseModel& noise);
BeliefState update_color(const BeliefState& b, const std::string& obj,
                         const Eigen::Vector3d& observed_hsv,
                         const ObservationNoiseModel& noise);
BeliefState update_weight(const BeliefState& b, const std::string& obj,
                          double observed_grams,
                          const ObservationNoiseModel& noise);

struct AssociationResult {
  BeliefState belief;
  Anchor anchor;
  bool is_new = false;
};

// Mahalanobis-gated data association of a detection against existing object
// position beliefs; creates a fresh _oN_ anchor when nothing gates in.
AssociationResult associate_detection(const BeliefState& b,
                                      const Detection& det,
                                      const ObservationNoiseModel& noise,
                                      double gate = 3.0);

// Probability mass for "an object satisfying the searched-for description is
// still undiscovered in this region": configured prior scaled by how much of
// the region remains unexplored.
double undiscovered_region_mass(const BeliefState& b,
                                const std::string& region_name);

}  // namespace owgp
