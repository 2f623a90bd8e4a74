#pragma once

#include <string>

#include "bodylink/se3.hpp"

namespace bodylink {

enum class ControlMode { Joystick, Body, Dual };

std::string to_string(ControlMode mode);
ControlMode control_mode_from_string(const std::string& s);

/// Measured body-effector pose T_{W→E_H}(t).
struct BodyState {
  Transform world_from_body;
  double timestamp = 0.0;
};

/// Joystick velocity already expressed in the world frame, m/s.
struct JoystickSample {
  Vec3 velocity_world = Vec3::Zero();
  double timestamp = 0.0;
};

/// The virtual pointer between the body frame and the desired effector.
struct VirtualLink {
  Vec3 link_body = Vec3::Zero();  // x_{E_H→E_R*}, body frame
  Rotation frozen_rotation;       // R_{W→E_R}(t0)
  Transform t0_body;              // T_{W→E_H}(t0)
  Vec3 t0_effector_position = Vec3::Zero();
};

struct ModeConfig {
  ControlMode mode = ControlMode::Dual;
  double joystick_gain = 0.25;       // m/s per unit deflection
  double joystick_max_speed = 0.25;  // m/s
  double dead_zone = 0.02;           // fraction of full-scale deflection
  Rotation joystick_frame;           // world from device axes

  void validate() const;

  /// Device deflection in [−1,1]³ to a world-frame velocity sample.
  JoystickSample sample_from_deflection(const Vec3& deflection, double t) const;
};

nlohmann::json to_json(const ModeConfig& cfg);
ModeConfig mode_config_from_json(const nlohmann::json& j);

VirtualLink init_link(const BodyState& body0, const Transform& effector0);

Transform desired_pose(const Vec3& position, const Rotation& frozen);

struct JoystickTarget {
  Vec3 accumulated;
  Transform desired;
};

/// Velocity mode: the desired position integrates the joystick from the
/// initial effector position (rectangle rule).
JoystickTarget joystick_target(const VirtualLink& link, const Vec3& accumulated, const JoystickSample& sample,
                               double dt);

/// Rigid-link mode: desired = R_body·link + x_body.
Transform body_target(const VirtualLink& link, const BodyState& body);

/// Hybrid mode. The joystick reshapes the link in the body frame using the
/// body rotation of this tick, then the rigid-link law applies.
Transform dual_target(VirtualLink& link, const BodyState& body, const JoystickSample& sample, double dt);

/// Per-trial control state for one mode.
class ControlLaw {
 public:
  ControlLaw(ControlMode mode, const BodyState& body0, const Transform& effector0);

  ControlMode mode() const { return mode_; }
  const VirtualLink& link() const { return link_; }
  const Vec3& accumulated() const { return accumulated_; }

  Transform update(const BodyState& body, const JoystickSample& joystick, double dt);

  /// Moves the integrator state so that the law reproduces `clamped` for
  /// this body pose; called when the servo clamps the desired position.
  /// Body mode has no integrator and is left untouched.
  void absorb_clamp(const BodyState& body, const Vec3& clamped);

  /// The pointer x_{E_H→E_R*}(t) in the body frame. Body and dual modes
  /// report the link itself; joystick mode reports the equivalent pointer
  /// R_bodyᵀ(x* − x_body).
  Vec3 effective_link(const BodyState& body, const Vec3& desired_position) const;

 private:
  ControlMode mode_;
  VirtualLink link_;
  Vec3 accumulated_ = Vec3::Zero();
};

}  // namespace bodylink
