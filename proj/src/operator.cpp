#include "bodylink/operator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "bodylink/config.hpp"
#include "bodylink/session.hpp"

namespace bodylink {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::BodyOnly: return "body-only";
    case PolicyKind::JoystickOnly: return "joystick-only";
    case PolicyKind::SequentialDual: return "sequential-dual";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "body-only") return PolicyKind::BodyOnly;
  if (s == "joystick-only") return PolicyKind::JoystickOnly;
  if (s == "sequential-dual") return PolicyKind::SequentialDual;
  throw std::invalid_argument("unknown policy '" + s + "' (expected body-only, joystick-only or sequential-dual)");
}

ControlMode paired_mode(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::BodyOnly: return ControlMode::Body;
    case PolicyKind::JoystickOnly: return ControlMode::Joystick;
    case PolicyKind::SequentialDual: return ControlMode::Dual;
  }
  return ControlMode::Dual;
}

void OperatorPolicy::validate() const {
  if (!(body_rot_speed_max > 0.0 && body_trans_speed_max > 0.0 && joystick_speed_max > 0.0)) {
    throw std::invalid_argument("operator speed limits must be positive");
  }
  if (!(handoff_fraction > 0.0 && handoff_fraction < 1.0)) {
    throw std::invalid_argument("handoff_fraction must lie in (0, 1)");
  }
  if (!(operator_gain > 0.0)) throw std::invalid_argument("operator gain must be positive");
  if (tremor_amplitude < 0.0) throw std::invalid_argument("tremor amplitude must be non-negative");
}

nlohmann::json to_json(const OperatorPolicy& p) {
  return {{"kind", to_string(p.kind)},
          {"body_rot_speed_max", p.body_rot_speed_max},
          {"body_trans_speed_max", p.body_trans_speed_max},
          {"joystick_speed_max", p.joystick_speed_max},
          {"handoff_fraction", p.handoff_fraction},
          {"operator_gain", p.operator_gain},
          {"noise_seed", p.noise_seed},
          {"tremor_amplitude", p.tremor_amplitude}};
}

OperatorPolicy operator_policy_from_json(const nlohmann::json& j, OperatorPolicy p) {
  if (j.contains("kind")) p.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  p.body_rot_speed_max = j.value("body_rot_speed_max", p.body_rot_speed_max);
  p.body_trans_speed_max = j.value("body_trans_speed_max", p.body_trans_speed_max);
  p.joystick_speed_max = j.value("joystick_speed_max", p.joystick_speed_max);
  p.handoff_fraction = j.value("handoff_fraction", p.handoff_fraction);
  p.operator_gain = j.value("operator_gain", p.operator_gain);
  p.noise_seed = j.value("noise_seed", p.noise_seed);
  p.tremor_amplitude = j.value("tremor_amplitude", p.tremor_amplitude);
  p.validate();
  return p;
}

BodyState apply_body_delta(const BodyState& body, const Transform& delta, double timestamp) {
  const Transform& b = body.world_from_body;
  return {Transform{delta.rotation * b.rotation, b.translation + delta.translation}, timestamp};
}

namespace {

Vec3 saturate(const Vec3& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Vec3(v * (max_norm / n)) : v;
}

// Body increment that moves the pointer tip along `error`.
Transform body_increment(const OperatorPolicy& p, const Vec3& error, const Vec3& pointer_world, double dt) {
  const double len2 = pointer_world.squaredNorm();
  if (len2 == 0.0) return Transform::identity();
  const Vec3 axis = pointer_world / std::sqrt(len2);
  const Vec3 along = axis.dot(error) * axis;
  const Vec3 across = error - along;
  const Vec3 omega = saturate(p.operator_gain * pointer_world.cross(across) / len2, p.body_rot_speed_max);
  const Vec3 velocity = saturate(p.operator_gain * along, p.body_trans_speed_max);
  return {from_angle_axis(omega * dt), velocity * dt};
}

Vec3 joystick_velocity(const OperatorPolicy& p, const Vec3& error) {
  const double n = error.norm();
  if (n == 0.0) return Vec3::Zero();
  return std::min(p.joystick_speed_max, p.operator_gain * n) * (error / n);
}

}  // namespace

OperatorOutput operator_step(const OperatorPolicy& policy, const Vec3& observed_error, double initial_error_norm,
                             const Vec3& pointer_world, double dt) {
  OperatorOutput out;
  switch (policy.kind) {
    case PolicyKind::BodyOnly:
      out.body_delta = body_increment(policy, observed_error, pointer_world, dt);
      break;
    case PolicyKind::JoystickOnly:
      out.joystick.velocity_world = joystick_velocity(policy, observed_error);
      break;
    case PolicyKind::SequentialDual:
      out.body_delta = body_increment(policy, observed_error, pointer_world, dt);
      if (observed_error.norm() <= policy.handoff_fraction * initial_error_norm) {
        out.joystick.velocity_world = joystick_velocity(policy, observed_error);
      }
      break;
  }
  return out;
}

SyntheticOperator::SyntheticOperator(OperatorPolicy policy) : policy_(policy) {
  policy_.validate();
  std::mt19937_64 rng(policy_.noise_seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 3; ++i) {
    tremor_freq_[static_cast<std::size_t>(i)] = 3.0 + 3.0 * unit();  // 3–6 Hz
    tremor_phase_[static_cast<std::size_t>(i)] = 2.0 * M_PI * unit();
  }
}

Vec3 SyntheticOperator::tremor_offset(double t) const {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[i] = policy_.tremor_amplitude * std::sin(2.0 * M_PI * tremor_freq_[k] * t + tremor_phase_[k]);
  }
  return out;
}

OperatorOutput SyntheticOperator::act(const Vec3& observed_error, int target_index, const Vec3& pointer_world,
                                      double t, double dt) {
  if (target_index != target_index_) {
    target_index_ = target_index;
    initial_error_norm_ = observed_error.norm();
  }
  OperatorOutput out = operator_step(policy_, observed_error, initial_error_norm_, pointer_world, dt);
  if (policy_.kind != PolicyKind::JoystickOnly && policy_.tremor_amplitude > 0.0) {
    const Vec3 shake = tremor_offset(t + dt) - tremor_offset(t);
    out.body_delta.translation = saturate(out.body_delta.translation + shake, policy_.body_trans_speed_max * dt);
  }
  out.joystick.timestamp = t + dt;
  return out;
}

TrialRunResult run_trial(const OperatorPolicy& policy, const SessionConfig& cfg, ControlMode mode,
                         const std::string& session_id) {
  if (paired_mode(policy.kind) != mode) {
    throw std::invalid_argument("policy " + to_string(policy.kind) + " cannot drive " + to_string(mode) + " mode");
  }
  SessionConfig run_cfg = cfg;
  run_cfg.mode.mode = mode;
  run_cfg.trial.mode = mode;
  OperatorPolicy op_policy = policy;
  op_policy.joystick_speed_max = std::min(op_policy.joystick_speed_max, run_cfg.mode.joystick_max_speed);

  MemoryLogSink sink;
  Session session(run_cfg, {session_id, run_cfg.config_hash, run_cfg.participant_id, to_string(policy.kind)}, &sink);
  SyntheticOperator op(op_policy);

  TrialRunResult result;
  result.session_id = session_id;
  session.start_trial();
  BodyState body = session.body();
  const double dt = run_cfg.dt();

  while (session.trial_running()) {
    const Trial& trial = *session.trial();
    const double t = session.time();
    if (t - trial.state().t_shown > run_cfg.target_timeout) {
      result.diagnostic = "target " + std::to_string(trial.state().current_target_index) + " not validated within " +
                          std::to_string(run_cfg.target_timeout) + " s (shown at t=" +
                          std::to_string(trial.state().t_shown) + " s)";
      session.abort_trial(result.diagnostic);
      result.aborted = true;
      break;
    }
    const Vec3 error = *trial.current_target() - session.desired().translation;
    const OperatorOutput out =
        op.act(error, trial.state().current_target_index, session.pointer_world(), t, dt);
    body = apply_body_delta(body, out.body_delta, t + dt);
    session.tick({body, out.joystick});
  }

  result.completed = session.status() == TrialStatus::Completed;
  result.sim_time = session.time();
  result.event_lines = std::move(sink.events);
  result.telemetry_lines = std::move(sink.telemetry);
  return result;
}

}  // namespace bodylink
