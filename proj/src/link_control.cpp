#include "bodylink/link_control.hpp"

#include <cmath>
#include <stdexcept>

namespace bodylink {

std::string to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::Joystick: return "joystick";
    case ControlMode::Body: return "body";
    case ControlMode::Dual: return "dual";
  }
  return "unknown";
}

ControlMode control_mode_from_string(const std::string& s) {
  if (s == "joystick") return ControlMode::Joystick;
  if (s == "body") return ControlMode::Body;
  if (s == "dual") return ControlMode::Dual;
  throw std::invalid_argument("unknown control mode '" + s + "' (expected joystick, body or dual)");
}

void ModeConfig::validate() const {
  if (!(joystick_gain > 0.0)) throw std::invalid_argument("joystick gain must be positive");
  if (!(joystick_max_speed > 0.0)) throw std::invalid_argument("joystick max speed must be positive");
  if (dead_zone < 0.0 || dead_zone >= 1.0) throw std::invalid_argument("dead zone must lie in [0, 1)");
}

JoystickSample ModeConfig::sample_from_deflection(const Vec3& deflection, double t) const {
  Vec3 d = deflection.cwiseMax(-1.0).cwiseMin(1.0);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < dead_zone) d[i] = 0.0;
  }
  Vec3 v = joystick_gain * (joystick_frame * d);
  const double speed = v.norm();
  if (speed > joystick_max_speed) v *= joystick_max_speed / speed;
  return {v, t};
}

nlohmann::json to_json(const ModeConfig& cfg) {
  return {{"mode", to_string(cfg.mode)},
          {"joystick_gain", cfg.joystick_gain},
          {"joystick_max_speed", cfg.joystick_max_speed},
          {"dead_zone", cfg.dead_zone},
          {"joystick_frame", rotation_to_json(cfg.joystick_frame)}};
}

ModeConfig mode_config_from_json(const nlohmann::json& j) {
  ModeConfig cfg;
  if (j.contains("mode")) cfg.mode = control_mode_from_string(j.at("mode").get<std::string>());
  cfg.joystick_gain = j.value("joystick_gain", cfg.joystick_gain);
  cfg.joystick_max_speed = j.value("joystick_max_speed", cfg.joystick_max_speed);
  cfg.dead_zone = j.value("dead_zone", cfg.dead_zone);
  if (j.contains("joystick_frame")) cfg.joystick_frame = rotation_from_json(j.at("joystick_frame"));
  cfg.validate();
  return cfg;
}

VirtualLink init_link(const BodyState& body0, const Transform& effector0) {
  VirtualLink link;
  const Transform& b = body0.world_from_body;
  link.link_body = b.rotation.transpose() * (effector0.translation - b.translation);
  link.frozen_rotation = effector0.rotation;
  link.t0_body = b;
  link.t0_effector_position = effector0.translation;
  return link;
}

Transform desired_pose(const Vec3& position, const Rotation& frozen) { return {frozen, position}; }

JoystickTarget joystick_target(const VirtualLink& link, const Vec3& accumulated, const JoystickSample& sample,
                               double dt) {
  JoystickTarget out;
  out.accumulated = accumulated + dt * sample.velocity_world;
  out.desired = desired_pose(link.t0_effector_position + out.accumulated, link.frozen_rotation);
  return out;
}

Transform body_target(const VirtualLink& link, const BodyState& body) {
  const Transform& b = body.world_from_body;
  return desired_pose(b.rotation * link.link_body + b.translation, link.frozen_rotation);
}

Transform dual_target(VirtualLink& link, const BodyState& body, const JoystickSample& sample, double dt) {
  link.link_body += dt * (body.world_from_body.rotation.transpose() * sample.velocity_world);
  return body_target(link, body);
}

ControlLaw::ControlLaw(ControlMode mode, const BodyState& body0, const Transform& effector0)
    : mode_(mode), link_(init_link(body0, effector0)) {}

Transform ControlLaw::update(const BodyState& body, const JoystickSample& joystick, double dt) {
  switch (mode_) {
    case ControlMode::Joystick: {
      JoystickTarget jt = joystick_target(link_, accumulated_, joystick, dt);
      accumulated_ = jt.accumulated;
      return jt.desired;
    }
    case ControlMode::Body: return body_target(link_, body);
    case ControlMode::Dual: return dual_target(link_, body, joystick, dt);
  }
  return body_target(link_, body);
}

void ControlLaw::absorb_clamp(const BodyState& body, const Vec3& clamped) {
  const Transform& b = body.world_from_body;
  switch (mode_) {
    case ControlMode::Joystick: accumulated_ = clamped - link_.t0_effector_position; break;
    case ControlMode::Dual: link_.link_body = b.rotation.transpose() * (clamped - b.translation); break;
    case ControlMode::Body: break;
  }
}

Vec3 ControlLaw::effective_link(const BodyState& body, const Vec3& desired_position) const {
  if (mode_ == ControlMode::Joystick) {
    const Transform& b = body.world_from_body;
    return b.rotation.transpose() * (desired_position - b.translation);
  }
  return link_.link_body;
}

}  // namespace bodylink
