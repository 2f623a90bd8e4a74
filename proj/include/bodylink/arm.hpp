#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "bodylink/se3.hpp"

namespace bodylink {

using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;
using Twist = Eigen::Matrix<double, 6, 1>;

inline constexpr int kArmDof = 7;

struct RevoluteJoint {
  Transform fixed_from_parent;
  Vec3 axis = Vec3::UnitZ();  // in the joint's own frame
  double min_angle = -M_PI;
  double max_angle = M_PI;
};

/// Serial chain of revolute joints. Session arms have exactly kArmDof
/// joints; smaller chains exist for analytic tests.
struct SerialArm {
  std::vector<RevoluteJoint> joints;
  Transform base_frame;           // world from robot base
  Transform flange_to_effector;
  double joint_velocity_limit = 1.3;  // rad/s
  Eigen::VectorXd home;               // declared home configuration

  int dof() const { return static_cast<int>(joints.size()); }

  /// Throws std::invalid_argument on broken invariants. When expected_dof is
  /// positive the joint count must match it.
  void validate(int expected_dof = 0) const;
};

struct JointState {
  Eigen::VectorXd angles;
  double timestamp = 0.0;
};

struct AxisBox {
  Vec3 min = Vec3::Constant(-1e9);
  Vec3 max = Vec3::Constant(1e9);

  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct ServoConfig {
  double gain_k = 0.5;           // 1/s
  double damping_lambda = 1e-3;
  double dt = 0.01;              // s
  AxisBox workspace_box;

  void validate() const;
};

Transform forward_kinematics(const SerialArm& arm, const JointState& q);

/// Rows 0..2 linear velocity, rows 3..5 angular velocity, both in world.
Jacobian geometric_jacobian(const SerialArm& arm, const JointState& q);

/// (desired − current translation, angle_axis(R_desired · R_currentᵀ)).
Twist pose_error(const Transform& current, const Transform& desired);

/// Jᵀ(JJᵀ + λ²I)⁻¹ · v
Eigen::VectorXd damped_pseudo_inverse_solve(const Jacobian& j, double lambda, const Twist& v);

struct ServoFlags {
  bool velocity_saturated = false;
  bool joint_limit_clamped = false;
  bool workspace_clamped = false;
};

struct ServoStep {
  JointState state;
  ServoFlags flags;
};

/// One explicit-Euler step of the resolved-rate servo q' = q + dt·J⁺_λ·k·e.
/// Joint velocities are scaled down together when any exceeds the limit;
/// the new angles are clamped to the joint limits.
ServoStep resolved_rate_step(const SerialArm& arm, const JointState& q, const Transform& desired,
                             const ServoConfig& cfg);

nlohmann::json to_json(const SerialArm& arm);
SerialArm arm_from_json(const nlohmann::json& j);
SerialArm load_arm(const std::string& path);

nlohmann::json to_json(const ServoConfig& cfg);
ServoConfig servo_config_from_json(const nlohmann::json& j);

}  // namespace bodylink
