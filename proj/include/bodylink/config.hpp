#pragma once

#include <string>

#include "bodylink/arm.hpp"
#include "bodylink/link_control.hpp"
#include "bodylink/operator.hpp"
#include "bodylink/se3.hpp"
#include "bodylink/trial.hpp"

namespace bodylink {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a session needs, resolved from one JSON document.
///
/// Body poses arrive in the tracker (optical) frame and are moved into the
/// world frame through the registry. The arm's own base_frame is expressed
/// in the registry's robot-base frame. When the trial center is omitted it
/// defaults to the effector position at the home configuration.
struct SessionConfig {
  FrameRegistry registry;
  SerialArm arm;  // base_frame already expressed in world
  ServoConfig servo;
  ModeConfig mode;
  TrialSpec trial;
  Transform initial_body_optical;  // standing pose of the body marker
  double tick_rate_control = 100.0;   // Hz
  double tick_rate_telemetry = 30.0;  // Hz
  double body_timeout = 0.2;          // s without body pose before hold-and-warn
  double target_timeout = 60.0;       // s, simulation watchdog per target
  OperatorPolicy operator_policy;
  std::string participant_id = "synthetic";
  std::string log_dir = "runs";

  nlohmann::json canonical;  // config document with the arm description inlined
  std::string config_hash;   // SHA-256 of canonical.dump()

  double dt() const { return 1.0 / tick_rate_control; }
  Transform initial_body_world() const { return to_world(registry, Frame::Optical, initial_body_optical); }
  void validate() const;
};

/// `base_dir` resolves a relative "arm" path.
SessionConfig session_config_from_json(const nlohmann::json& doc, const std::string& base_dir);
SessionConfig load_session_config(const std::string& path);

std::string sha256_hex(const std::string& data);

}  // namespace bodylink
