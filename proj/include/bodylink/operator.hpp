#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bodylink/link_control.hpp"
#include "bodylink/se3.hpp"

namespace bodylink {

struct SessionConfig;

enum class PolicyKind { BodyOnly, JoystickOnly, SequentialDual };

std::string to_string(PolicyKind kind);
/// Accepts "body-only", "joystick-only", "sequential-dual".
PolicyKind policy_kind_from_string(const std::string& s);
ControlMode paired_mode(PolicyKind kind);

/// Scripted operator. The defaults for the human motion limits are invented
/// round numbers, not measurements.
struct OperatorPolicy {
  PolicyKind kind = PolicyKind::SequentialDual;
  double body_rot_speed_max = 0.8;     // rad/s
  double body_trans_speed_max = 0.15;  // m/s
  double joystick_speed_max = 0.2;     // m/s
  double handoff_fraction = 0.2;       // error fraction at which the joystick joins in
  double operator_gain = 1.5;          // 1/s, proportional reaction to the seen error
  std::uint64_t noise_seed = 0;
  double tremor_amplitude = 0.001;     // m

  void validate() const;
};

nlohmann::json to_json(const OperatorPolicy& p);
OperatorPolicy operator_policy_from_json(const nlohmann::json& j, OperatorPolicy defaults = {});

/// Per-tick operator action. body_delta is a world-frame increment about
/// the body origin: R' = ΔR·R, x' = x + Δx.
struct OperatorOutput {
  Transform body_delta;
  JoystickSample joystick;
};

BodyState apply_body_delta(const BodyState& body, const Transform& delta, double timestamp);

/// Noise-free operator law.
///
/// `observed_error` points from the displayed virtual effector to the
/// target. The body channel turns the part of the error perpendicular to
/// the pointer into a rotation about the body origin (lever effect) and the
/// part along the pointer into a translation (depth). The joystick channel
/// commands min(v_max, gain·‖e‖) along e. SequentialDual uses the body only
/// while ‖e‖ > handoff_fraction·initial_error_norm, then both channels.
OperatorOutput operator_step(const OperatorPolicy& policy, const Vec3& observed_error, double initial_error_norm,
                             const Vec3& pointer_world, double dt);

/// Closed-loop operator with per-target memory and seeded tremor.
class SyntheticOperator {
 public:
  explicit SyntheticOperator(OperatorPolicy policy);

  OperatorOutput act(const Vec3& observed_error, int target_index, const Vec3& pointer_world, double t,
                     double dt);

  const OperatorPolicy& policy() const { return policy_; }

 private:
  Vec3 tremor_offset(double t) const;

  OperatorPolicy policy_;
  int target_index_ = -1;
  double initial_error_norm_ = 0.0;
  std::array<double, 3> tremor_freq_{};
  std::array<double, 3> tremor_phase_{};
};

struct TrialRunResult {
  std::string session_id;
  std::vector<std::string> event_lines;
  std::vector<std::string> telemetry_lines;
  bool completed = false;
  bool aborted = false;
  std::string diagnostic;
  double sim_time = 0.0;
};

/// Full closed-loop trial at the control tick in virtual time. The policy
/// must be paired with `mode` (BodyOnly↔Body, JoystickOnly↔Joystick,
/// SequentialDual↔Dual). A target that is not validated within
/// cfg.target_timeout aborts the trial with a diagnostic.
TrialRunResult run_trial(const OperatorPolicy& policy, const SessionConfig& cfg, ControlMode mode,
                         const std::string& session_id);

}  // namespace bodylink
