#include "bodylink/se3.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace bodylink {

namespace {

Vec3 vee(const Mat3& m) {
  return Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)) * 0.5;
}

// Axis convention for the half-turn: largest-magnitude component positive,
// ties resolved in x, y, z order.
Vec3 canonical_half_turn_axis(Vec3 a) {
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(a[i]) > std::abs(a[k])) k = i;
  }
  if (a[k] < 0.0) a = -a;
  return a;
}

}  // namespace

double orthonormality_defect(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Rotation Rotation::ingest(const Mat3& m) {
  if (!m.allFinite()) throw GeometryError("rotation contains non-finite entries");
  const double defect = orthonormality_defect(m);
  if (defect > kRejectDefect) {
    throw GeometryError("rotation rejected: orthonormality defect " + std::to_string(defect));
  }
  if (m.determinant() <= 0.0) throw GeometryError("rotation rejected: determinant is not positive");
  if (defect <= kRepairDefect) return Rotation(m);
  // Polar decomposition: nearest orthonormal matrix is U Vᵀ.
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Rotation(svd.matrixU() * svd.matrixV().transpose());
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  return from_angle_axis(axis.normalized() * angle);
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  Eigen::Quaterniond q(w, x, y, z);
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-9) throw GeometryError("degenerate quaternion");
  q.normalize();
  return Rotation(q.toRotationMatrix());
}

Transform compose(const Transform& a, const Transform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Transform inverse(const Transform& t) {
  const Rotation rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Vec3 angle_axis(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 w = vee(m);  // sin θ · axis
  const double s = w.norm();
  const double c = std::clamp((m.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < 1e-7) return w;
  if (c > -0.5) return w * (theta / s);

  // Past 2π/3 the antisymmetric part loses precision; recover the axis from
  // the symmetric part (1 − cos θ)·a·aᵀ instead.
  const Mat3 b = 0.5 * (m + m.transpose()) - c * Mat3::Identity();
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (b(i, i) > b(k, k)) k = i;
  }
  Vec3 a = b.col(k) / std::sqrt(b(k, k) * (1.0 - c));
  a.normalize();
  if (s < 1e-12) {
    a = canonical_half_turn_axis(a);
  } else if (a.dot(w) < 0.0) {
    a = -a;
  }
  return a * theta;
}

Rotation from_angle_axis(const Vec3& v) {
  const double theta = v.norm();
  if (theta < 1e-8) {
    const Mat3 k = skew(v);
    return Rotation::from_matrix(Mat3::Identity() + k + 0.5 * k * k);
  }
  const Mat3 k = skew(v / theta);
  return Rotation::from_matrix(Mat3::Identity() + std::sin(theta) * k +
                               (1.0 - std::cos(theta)) * k * k);
}

double max_abs_diff(const Transform& a, const Transform& b) {
  const double dr = (a.rotation.matrix() - b.rotation.matrix()).cwiseAbs().maxCoeff();
  const double dt = (a.translation - b.translation).cwiseAbs().maxCoeff();
  return std::max(dr, dt);
}

const Transform& FrameRegistry::world_from(Frame f) const {
  switch (f) {
    case Frame::Optical: return world_from_optical;
    case Frame::Headset: return world_from_headset;
    case Frame::RobotBase: return world_from_robot_base;
  }
  return world_from_optical;
}

Transform to_world(const FrameRegistry& reg, Frame frame, const Transform& t) {
  return compose(reg.world_from(frame), t);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw GeometryError("expected an array of 3 numbers");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!v.allFinite()) throw GeometryError("vector contains non-finite entries");
  return v;
}

nlohmann::json rotation_to_json(const Rotation& r) {
  nlohmann::json out = nlohmann::json::array();
  const Mat3& m = r.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) out.push_back(m(i, k));
  }
  return out;
}

Rotation rotation_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 9) throw GeometryError("rotation must be 9 numbers, row-major");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) m(i, k) = j[3 * i + k].get<double>();
  }
  return Rotation::ingest(m);
}

nlohmann::json to_json(const Transform& t) {
  return {{"rotation", rotation_to_json(t.rotation)}, {"translation", to_json(t.translation)}};
}

Transform transform_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw GeometryError("transform must be an object");
  Transform t;
  if (j.contains("rotation")) t.rotation = rotation_from_json(j.at("rotation"));
  if (j.contains("translation")) t.translation = vec3_from_json(j.at("translation"));
  return t;
}

nlohmann::json to_json(const FrameRegistry& reg) {
  return {{"world_from_optical", to_json(reg.world_from_optical)},
          {"world_from_headset", to_json(reg.world_from_headset)},
          {"world_from_robot_base", to_json(reg.world_from_robot_base)}};
}

FrameRegistry registry_from_json(const nlohmann::json& j) {
  FrameRegistry reg;
  if (j.contains("world_from_optical")) reg.world_from_optical = transform_from_json(j.at("world_from_optical"));
  if (j.contains("world_from_headset")) reg.world_from_headset = transform_from_json(j.at("world_from_headset"));
  if (j.contains("world_from_robot_base")) {
    reg.world_from_robot_base = transform_from_json(j.at("world_from_robot_base"));
  }
  return reg;
}

}  // namespace bodylink
