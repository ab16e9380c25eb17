#include "owgp/domain.h"

#include <algorithm>
#include <stdexcept>

#include "owgp/gaussian.h"

namespace owgp {

bool HsvBox::contains(const Eigen::Vector3d& hsv) const {
  const double h = wrap_unit(hsv.x());
  const bool h_in = (h_lo <= h_hi) ? (h >= h_lo && h <= h_hi)
                                   : (h >= h_lo || h <= h_hi);
  return h_in && hsv.y() >= s_lo && hsv.y() <= s_hi && hsv.z() >= v_lo &&
         hsv.z() <= v_hi;
}

int DomainConfig::type_index(const std::string& t) const {
  auto it = std::find(types.begin(), types.end(), t);
  return it == types.end() ? -1 : static_cast<int>(it - types.begin());
}

bool DomainConfig::is_type(const std::string& rel) const {
  return type_index(rel) >= 0;
}

bool DomainConfig::is_color(const std::string& rel) const {
  return colors.count(rel) > 0;
}

std::optional<RelationKind> DomainConfig::relation_kind(
    const std::string& rel) const {
  if (is_type(rel)) return RelationKind::Type;
  if (is_color(rel)) return RelationKind::Color;
  if (rel == "heavy") return RelationKind::Heavy;
  if (rel == "on") return RelationKind::On;
  if (rel == "in") return RelationKind::In;
  if (rel == "object") return RelationKind::Any;
  return std::nullopt;
}

DomainConfig DomainConfig::defaults() {
  DomainConfig d;
  d.types = {"box", "can", "soda"};
  d.colors["green"] = {0.22, 0.45, 0.3, 1.0, 0.2, 1.0};
  d.colors["red"] = {0.95, 0.05, 0.3, 1.0, 0.2, 1.0};
  d.colors["blue"] = {0.55, 0.70, 0.3, 1.0, 0.2, 1.0};
  d.heavy_threshold_g = 400.0;
  return d;
}

void ObservationNoiseModel::validate(int n_types) const {
  if (type_confusion.rows() != n_types || type_confusion.cols() != n_types) {
    throw std::invalid_argument("type_confusion has wrong dimensions");
  }
  for (int i = 0; i < n_types; ++i) {
    double row = 0.0;
    for (int j = 0; j < n_types; ++j) {
      const double c = type_confusion(i, j);
      if (c < 0.0 || c > 1.0) {
        throw std::invalid_argument("type_confusion entry outside [0,1]");
      }
      row += c;
    }
    if (std::abs(row - 1.0) > 1e-9) {
      throw std::invalid_argument("type_confusion row does not sum to 1");
    }
  }
  if (!is_psd(pose_obs_cov)) throw std::invalid_argument("pose_obs_cov not PSD");
  if (!is_psd(color_obs_cov)) throw std::invalid_argument("color_obs_cov not PSD");
  if (weight_obs_sigma <= 0.0) throw std::invalid_argument("weight_obs_sigma <= 0");
  if (false_negative_rate < 0.0 || false_negative_rate >= 1.0) {
    throw std::invalid_argument("false_negative_rate outside [0,1)");
  }
}

ObservationNoiseModel ObservationNoiseModel::defaults(int n_types) {
  ObservationNoiseModel m;
  m.type_confusion = Eigen::MatrixXd::Constant(
      n_types, n_types, n_types > 1 ? 0.1 / (n_types - 1) : 0.0);
  for (int i = 0; i < n_types; ++i) m.type_confusion(i, i) = n_types > 1 ? 0.9 : 1.0;
  m.pose_obs_cov = Eigen::Vector4d(0.03 * 0.03, 0.03 * 0.03, 0.03 * 0.03,
                                   0.05 * 0.05)
                       .asDiagonal();
  m.color_obs_cov = Eigen::Vector3d(0.02 * 0.02, 0.03 * 0.03, 0.03 * 0.03)
                        .asDiagonal();
  m.weight_obs_sigma = 0.05;
  m.false_negative_rate = 0.05;
  return m;
}

}  // namespace owgp
