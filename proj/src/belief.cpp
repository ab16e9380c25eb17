#include "owgp/belief.h"

#include <cmath>
#include <stdexcept>

#include "owgp/gaussian.h"

namespace owgp {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace

// --- TypeDistribution --------------------------------------------------------

double TypeDistribution::prob(const std::string& t) const {
  auto it = probs.find(t);
  return it == probs.end() ? 0.0 : it->second;
}

std::string TypeDistribution::map_type() const {
  std::string best;
  double bp = -1.0;
  for (const auto& [t, p] : probs) {
    if (p > bp) { bp = p; best = t; }
  }
  return best;
}

double TypeDistribution::max_prob() const {
  double bp = 0.0;
  for (const auto& [t, p] : probs) bp = std::max(bp, p);
  return bp;
}

void TypeDistribution::normalize() {
  double total = 0.0;
  for (const auto& [t, p] : probs) total += p;
  if (total <= 0.0) fail("type distribution has zero mass");
  for (auto& [t, p] : probs) p /= total;
}

TypeDistribution TypeDistribution::uniform(const std::vector<std::string>& types) {
  TypeDistribution d;
  for (const auto& t : types) d.probs[t] = 1.0 / types.size();
  return d;
}

TypeDistribution TypeDistribution::delta(const std::string& t,
                                         const std::vector<std::string>& types) {
  TypeDistribution d;
  for (const auto& ty : types) d.probs[ty] = (ty == t) ? 1.0 : 0.0;
  return d;
}

// --- PoseDistribution / WeightDistribution -----------------------------------

PoseDistribution PoseDistribution::at(double x, double y, double z, double theta,
                                      double pos_sd, double theta_sd) {
  PoseDistribution p;
  p.mean << x, y, z, wrap_angle(theta);
  p.cov = Eigen::Vector4d(pos_sd * pos_sd, pos_sd * pos_sd, pos_sd * pos_sd,
                          theta_sd * theta_sd)
              .asDiagonal();
  return p;
}

double WeightDistribution::prob_at_least(double grams) const {
  if (grams <= 0.0) return 1.0;
  return 1.0 - normal_cdf((std::log(grams) - mu) / sigma);
}

// --- BeliefState anchors ------------------------------------------------------

std::optional<Anchor> BeliefState::find_anchor(const std::string& name) const {
  for (const auto& [id, ob] : objects) {
    if (ob.anchor.name == name) return ob.anchor;
  }
  for (const auto& [id, r] : regions) {
    if (r.anchor.name == name) return r.anchor;
  }
  return std::nullopt;
}

const ObjectBelief* BeliefState::object(const std::string& name) const {
  for (const auto& [id, ob] : objects) {
    if (ob.anchor.name == name) return &ob;
  }
  return nullptr;
}

const ObjectBelief& BeliefState::object_or_throw(const std::string& name) const {
  const ObjectBelief* ob = object(name);
  if (!ob) fail("unknown object anchor: " + name);
  return *ob;
}

const Region* BeliefState::region(const std::string& name) const {
  for (const auto& [id, r] : regions) {
    if (r.anchor.name == name) return &r;
  }
  return nullptr;
}

bool BeliefState::is_held(const std::string& name) const {
  if (!held) return false;
  auto it = objects.find(*held);
  return it != objects.end() && it->second.anchor.name == name;
}

Anchor BeliefState::add_object(ObjectBelief b) {
  const int id = next_anchor_id++;
  b.anchor.id = id;
  b.anchor.kind = AnchorKind::Object;
  if (b.anchor.name.empty()) {
    b.anchor.name = "_o" + std::to_string(next_object_index++) + "_";
    b.anchor.named_constant = false;
  } else if (b.anchor.name.rfind("_o", 0) == 0) {
    // Declared internal names advance the counter so discovered objects
    // continue the sequence.
    const std::string digits =
        b.anchor.name.substr(2, b.anchor.name.size() - 3);
    char* end = nullptr;
    const long n = std::strtol(digits.c_str(), &end, 10);
    if (end && *end == '\0' && n >= next_object_index) {
      next_object_index = static_cast<int>(n) + 1;
    }
  }
  objects.emplace(id, std::move(b));
  return objects.at(id).anchor;
}

Anchor BeliefState::add_region(Region r, double confidence, bool named) {
  const int id = next_anchor_id++;
  r.anchor.id = id;
  r.anchor.kind = AnchorKind::Region;
  r.anchor.named_constant = named;
  if (r.anchor.name.empty()) r.anchor.name = "_reg" + std::to_string(id) + "_";
  regions.emplace(id, std::move(r));
  region_confidence[id] = confidence;
  return regions.at(id).anchor;
}

std::vector<Anchor> BeliefState::object_anchors() const {
  std::vector<Anchor> out;
  out.reserve(objects.size());
  for (const auto& [id, ob] : objects) out.push_back(ob.anchor);
  return out;
}

double BeliefState::confidence_of(const std::string& region_name) const {
  const Region* r = region(region_name);
  if (!r) fail("unknown region: " + region_name);
  auto it = region_confidence.find(r->anchor.id);
  return it == region_confidence.end() ? 0.0 : it->second;
}

// --- core queries -------------------------------------------------------------

bool cov_dominates(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2,
                   double tol) {
  if (s1.rows() != s2.rows() || s1.cols() != s2.cols()) {
    fail("cov_dominates: dimension mismatch");
  }
  return is_psd(s2 - s1, tol);
}

namespace {

// P(color of `ob` lies in `box`): per-axis product of 1-D integrals of the
// truncated HSV Gaussian, hue on the circle. Uses the diagonal of the stored
// covariance.
double color_box_prob(const ObjectBelief& ob, const HsvBox& box) {
  const Eigen::Vector3d m = ob.color_d.mean;
  const Eigen::Vector3d var = ob.color_d.cov.diagonal();
  const double ph = wrapped_interval_prob(m.x(), std::sqrt(std::max(var.x(), 0.0)),
                                          box.h_lo, box.h_hi);
  const double ps = truncated_unit_interval_prob(
      m.y(), std::sqrt(std::max(var.y(), 0.0)), box.s_lo, box.s_hi);
  const double pv = truncated_unit_interval_prob(
      m.z(), std::sqrt(std::max(var.z(), 0.0)), box.v_lo, box.v_hi);
  return ph * ps * pv;
}

// P(pose of `ob` inside the XY footprint of `r` with z in [z_lo, z_hi]).
double pose_box_prob(const ObjectBelief& ob, const Region& r, double z_lo,
                     double z_hi) {
  const Eigen::Vector4d m = ob.pose_d.mean;
  const Eigen::Vector4d var = ob.pose_d.cov.diagonal();
  const double px = normal_interval_prob(m.x(), std::sqrt(std::max(var.x(), 0.0)),
                                         r.lo.x(), r.hi.x());
  const double py = normal_interval_prob(m.y(), std::sqrt(std::max(var.y(), 0.0)),
                                         r.lo.y(), r.hi.y());
  const double pz = normal_interval_prob(m.z(), std::sqrt(std::max(var.z(), 0.0)),
                                         z_lo, z_hi);
  return px * py * pz;
}

// Half-width of the z slab accepted as "resting on" a surface.
constexpr double kOnSurfaceTolerance = 0.1;

}  // namespace

double prob_ground_relation(const BeliefState& b, const std::string& rel,
                            const std::vector<std::string>& args) {
  if (!b.domain) fail("belief has no domain config");
  const auto kind = b.domain->relation_kind(rel);
  if (!kind) fail("unknown relation: " + rel);
  if (static_cast<int>(args.size()) != b.domain->arity(*kind)) {
    fail("arity mismatch for relation " + rel);
  }

  switch (*kind) {
    case RelationKind::Type: {
      const ObjectBelief& ob = b.object_or_throw(args[0]);
      return ob.type_d.prob(rel) * ob.detection_weight;
    }
    case RelationKind::Color: {
      const ObjectBelief& ob = b.object_or_throw(args[0]);
      return color_box_prob(ob, b.domain->colors.at(rel)) * ob.detection_weight;
    }
    case RelationKind::Heavy: {
      const ObjectBelief& ob = b.object_or_throw(args[0]);
      return ob.weight_d.prob_at_least(b.domain->heavy_threshold_g) *
             ob.detection_weight;
    }
    case RelationKind::Any: {
      const ObjectBelief& ob = b.object_or_throw(args[0]);
      return ob.detection_weight;
    }
    case RelationKind::On:
    case RelationKind::In: {
      const ObjectBelief& ob = b.object_or_throw(args[0]);
      const Region* r = b.region(args[1]);
      if (!r) fail("unknown region in " + rel + ": " + args[1]);
      if (b.is_held(args[0])) return 0.0;  // in hand, not on any surface
      double p;
      if (*kind == RelationKind::On) {
        p = pose_box_prob(ob, *r, r->surface_z() - kOnSurfaceTolerance,
                          r->surface_z() + kOnSurfaceTolerance);
      } else {
        // Objects resting on the region floor count as inside it.
        p = pose_box_prob(ob, *r, r->lo.z() - kOnSurfaceTolerance, r->hi.z());
      }
      return p * ob.detection_weight;
    }
  }
  fail("unreachable relation kind");
}

void cont_belief_params(const BeliefState& b, const std::string& obj,
                        Quantity q, Eigen::VectorXd& mean,
                        Eigen::MatrixXd& cov, double& weight) {
  const ObjectBelief& ob = b.object_or_throw(obj);
  weight = ob.detection_weight;
  switch (q) {
    case Quantity::Pose:
      mean = ob.pose_d.mean;
      cov = ob.pose_d.cov;
      return;
    case Quantity::Color:
      mean = ob.color_d.mean;
      cov = ob.color_d.cov;
      return;
    case Quantity::Weight:
      mean = Eigen::VectorXd::Constant(1, ob.weight_d.mu);
      cov = Eigen::MatrixXd::Constant(1, 1, ob.weight_d.sigma * ob.weight_d.sigma);
      return;
  }
  fail("unreachable quantity");
}

bool holds_cont_fluent(const BeliefState& b, const std::string& obj,
                       Quantity q, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& sigma,
                       const Eigen::VectorXd& delta, double p) {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double weight = 1.0;
  cont_belief_params(b, obj, q, mean, cov, weight);
  if (mu.size() > 0) {
    if (mu.size() != mean.size() || delta.size() != mean.size()) {
      fail("holds_cont_fluent: mu/delta dimension mismatch");
    }
    for (int i = 0; i < mean.size(); ++i) {
      double diff = mu(i) - mean(i);
      if (q == Quantity::Color && i == 0) diff = unit_circle_diff(mu(i), mean(i));
      if (q == Quantity::Pose && i == 3) diff = wrap_angle(mu(i) - mean(i));
      if (std::abs(diff) > delta(i)) return false;
    }
  }
  if (sigma.rows() != cov.rows()) fail("holds_cont_fluent: sigma dimension mismatch");
  if (!cov_dominates(cov, sigma)) return false;
  return p >= weight;
}

// --- measurement updates -------------------------------------------------------

namespace {

ObjectBelief& mutable_object(BeliefState& b, const std::string& name) {
  for (auto& [id, ob] : b.objects) {
    if (ob.anchor.name == name) return ob;
  }
  fail("unknown object anchor: " + name);
}

// Linear-Gaussian measurement update with identity measurement model.
// `wrap` maps an innovation component to its wrapped representative.
template <int N>
void kalman_update(Eigen::Matrix<double, N, 1>& mean,
                   Eigen::Matrix<double, N, N>& cov,
                   const Eigen::Matrix<double, N, 1>& obs,
                   const Eigen::Matrix<double, N, N>& obs_cov,
                   double (*wrap_component)(int, double)) {
  const Eigen::Matrix<double, N, N> innovation_cov = cov + obs_cov;
  Eigen::FullPivLU<Eigen::Matrix<double, N, N>> lu(innovation_cov);
  if (!lu.isInvertible()) fail("singular innovation covariance");
  const Eigen::Matrix<double, N, N> gain = cov * lu.inverse();
  Eigen::Matrix<double, N, 1> innovation = obs - mean;
  for (int i = 0; i < N; ++i) innovation(i) = wrap_component(i, innovation(i));
  mean += gain * innovation;
  cov = (Eigen::Matrix<double, N, N>::Identity() - gain) * cov;
  cov = 0.5 * (cov + cov.transpose()).eval();  // keep symmetric
}

double wrap_pose_component(int i, double v) { return i == 3 ? wrap_angle(v) : v; }
double wrap_color_component(int i, double v) {
  if (i != 0) return v;
  // shortest-arc hue innovation
  double d = std::fmod(v, 1.0);
  if (d >= 0.5) d -= 1.0;
  if (d < -0.5) d += 1.0;
  return d;
}

}  // namespace

BeliefState update_type(const BeliefState& b, const std::string& obj,
                        const std::string& observed_type,
                        const ObservationNoiseModel& noise) {
  if (!b.domain) fail("belief has no domain config");
  const int j = b.domain->type_index(observed_type);
  if (j < 0) fail("unknown type name: " + observed_type);
  BeliefState out = b;
  ObjectBelief& ob = mutable_object(out, obj);
  for (auto& [t, p] : ob.type_d.probs) {
    const int i = b.domain->type_index(t);
    p *= (i >= 0) ? noise.type_confusion(i, j) : 0.0;
  }
  ob.type_d.normalize();
  return out;
}

BeliefState update_pose(const BeliefState& b, const std::string& obj,
                        const Eigen::Vector4d& observed_pose,
                        const ObservationNoiseModel& noise) {
  BeliefState out = b;
  ObjectBelief& ob = mutable_object(out, obj);
  Eigen::Matrix4d obs_cov = noise.pose_obs_cov;
  kalman_update<4>(ob.pose_d.mean, ob.pose_d.cov, observed_pose, obs_cov,
                   &wrap_pose_component);
  ob.pose_d.mean(3) = wrap_angle(ob.pose_d.mean(3));
  return out;
}

BeliefState update_color(const BeliefState& b, const std::string& obj,
                         const Eigen::Vector3d& observed_hsv,
                         const ObservationNoiseModel& noise) {
  BeliefState out = b;
  ObjectBelief& ob = mutable_object(out, obj);
  Eigen::Matrix3d obs_cov = noise.color_obs_cov;
  kalman_update<3>(ob.color_d.mean, ob.color_d.cov, observed_hsv, obs_cov,
                   &wrap_color_component);
  ob.color_d.mean(0) = wrap_unit(ob.color_d.mean(0));
  ob.color_d.mean(1) = std::clamp(ob.color_d.mean(1), 0.0, 1.0);
  ob.color_d.mean(2) = std::clamp(ob.color_d.mean(2), 0.0, 1.0);
  return out;
}

BeliefState update_weight(const BeliefState& b, const std::string& obj,
                          double observed_grams,
                          const ObservationNoiseModel& noise) {
  if (observed_grams <= 0.0) fail("non-positive weight observation");
  BeliefState out = b;
  ObjectBelief& ob = mutable_object(out, obj);
  const double v = ob.weight_d.sigma * ob.weight_d.sigma;
  const double r = noise.weight_obs_sigma * noise.weight_obs_sigma;
  const double k = v / (v + r);
  ob.weight_d.mu += k * (std::log(observed_grams) - ob.weight_d.mu);
  ob.weight_d.sigma = std::sqrt((1.0 - k) * v);
  return out;
}

// --- data association -----------------------------------------------------------

namespace {

// Raising rule for the existence weight on re-detection.
double raised_detection_weight(double dw) { return 1.0 - (1.0 - dw) * 0.25; }

constexpr double kNewDetectionWeight = 0.95;

}  // namespace

AssociationResult associate_detection(const BeliefState& b, const Detection& det,
                                      const ObservationNoiseModel& noise,
                                      double gate) {
  if (!det.pose.allFinite()) fail("detection pose not finite");

  const Eigen::Matrix3d r_pos = noise.pose_obs_cov.topLeftCorner<3, 3>();
  double best_d = std::numeric_limits<double>::infinity();
  std::string best_name;
  for (const auto& [id, ob] : b.objects) {
    if (b.held && *b.held == id) continue;  // a held object cannot be re-detected
    const Eigen::Vector3d diff =
        det.pose.head<3>() - ob.pose_d.mean.head<3>();
    const Eigen::Matrix3d s = ob.pose_d.cov.topLeftCorner<3, 3>() + r_pos;
    const Eigen::Vector3d w = s.ldlt().solve(diff);
    const double d = std::sqrt(std::max(diff.dot(w), 0.0));
    if (d < best_d) {
      best_d = d;
      best_name = ob.anchor.name;
    }
  }

  if (best_d <= gate) {
    BeliefState out = update_pose(b, best_name, det.pose, noise);
    out = update_type(out, best_name, det.type, noise);
    out = update_color(out, best_name, det.hsv, noise);
    ObjectBelief& ob = mutable_object(out, best_name);
    ob.detection_weight = raised_detection_weight(ob.detection_weight);
    return {std::move(out), b.object_or_throw(best_name).anchor, false};
  }

  BeliefState out = b;
  ObjectBelief nb;
  // Type posterior from a uniform prior and one confusion-likelihood update.
  nb.type_d = TypeDistribution::uniform(b.domain->types);
  const int j = b.domain->type_index(det.type);
  if (j < 0) fail("unknown detected type: " + det.type);
  for (auto& [t, p] : nb.type_d.probs) {
    p *= noise.type_confusion(b.domain->type_index(t), j);
  }
  nb.type_d.normalize();
  nb.pose_d.mean = det.pose;
  nb.pose_d.mean(3) = wrap_angle(nb.pose_d.mean(3));
  nb.pose_d.cov = noise.pose_obs_cov;
  nb.color_d.mean = det.hsv;
  nb.color_d.mean(0) = wrap_unit(nb.color_d.mean(0));
  nb.color_d.cov = noise.color_obs_cov;
  nb.weight_d = WeightDistribution::prior();
  nb.detection_weight = kNewDetectionWeight;
  const Anchor a = out.add_object(std::move(nb));
  return {std::move(out), a, true};
}

double undiscovered_region_mass(const BeliefState& b,
                                const std::string& region_name) {
  const Region* r = b.region(region_name);
  if (!r) fail("unknown region: " + region_name);
  double prior = 0.0;
  if (b.domain) {
    auto it = b.domain->region_priors.find(region_name);
    if (it != b.domain->region_priors.end()) prior = it->second;
  }
  const double conf = b.confidence_of(region_name);
  return std::clamp(prior * (1.0 - conf), 0.0, 1.0);
}

}  // namespace owgp
