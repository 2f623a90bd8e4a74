#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace bodylink {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Raised when external input cannot be turned into a valid rotation/transform.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Proper rotation stored as a 3x3 matrix. Every module boundary exchanges
/// rotations in this form.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Wraps a matrix produced by internal algebra (already orthonormal).
  static Rotation from_matrix(const Mat3& m) { return Rotation(m); }

  /// Accepts a matrix that arrived from a file or the wire. A defect above
  /// kRepairDefect is repaired by polar decomposition; above kRejectDefect
  /// (or with a negative determinant) the matrix is rejected.
  static Rotation ingest(const Mat3& m);

  static Rotation about_axis(const Vec3& axis, double angle);
  static Rotation rz(double angle) { return about_axis(Vec3::UnitZ(), angle); }
  static Rotation from_quaternion(double w, double x, double y, double z);

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(m_.transpose()); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  bool operator==(const Rotation& rhs) const { return m_ == rhs.m_; }

  static constexpr double kRepairDefect = 1e-6;
  static constexpr double kRejectDefect = 1e-2;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// max |RᵀR − I| entry.
double orthonormality_defect(const Mat3& m);

struct Transform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Transform identity() { return {}; }
  static Transform from_translation(const Vec3& t) { return {Rotation(), t}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  bool operator==(const Transform& rhs) const {
    return rotation == rhs.rotation && translation == rhs.translation;
  }
};

Transform compose(const Transform& a, const Transform& b);
Transform inverse(const Transform& t);

/// Rotation vector axis·θ with θ ∈ [0, π].
Vec3 angle_axis(const Rotation& r);
Rotation from_angle_axis(const Vec3& v);

Mat3 skew(const Vec3& v);

/// Largest per-entry difference between two transforms (rotation entries
/// and translation components mixed).
double max_abs_diff(const Transform& a, const Transform& b);

enum class Frame { Optical, Headset, RobotBase };

/// World-from-X transforms produced by the lab registration procedure.
struct FrameRegistry {
  Transform world_from_optical;
  Transform world_from_headset;
  Transform world_from_robot_base;

  const Transform& world_from(Frame f) const;
};

Transform to_world(const FrameRegistry& reg, Frame frame, const Transform& t);

// JSON: {"rotation": [9 numbers row-major], "translation": [3 numbers]}.
nlohmann::json to_json(const Transform& t);
Transform transform_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);
nlohmann::json rotation_to_json(const Rotation& r);
Rotation rotation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FrameRegistry& reg);
FrameRegistry registry_from_json(const nlohmann::json& j);

}  // namespace bodylink
