#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bodylink/arm.hpp"
#include "bodylink/config.hpp"
#include "bodylink/link_control.hpp"
#include "bodylink/trial.hpp"

namespace bodylink {

inline constexpr int kLogSchemaVersion = 1;

struct SessionMeta {
  std::string session_id;
  std::string config_hash;
  std::string participant_id;
  std::string policy;  // empty for live sessions
};

/// Ordered destination for the two session logs (JSONL lines without '\n').
class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual void event_line(const std::string& line) = 0;
  virtual void telemetry_line(const std::string& line) = 0;
};

class MemoryLogSink : public LogSink {
 public:
  void event_line(const std::string& line) override { events.push_back(line); }
  void telemetry_line(const std::string& line) override { telemetry.push_back(line); }

  std::vector<std::string> events;
  std::vector<std::string> telemetry;
};

/// Writes <stem>.events.jsonl and <stem>.telemetry.jsonl.
class FileLogSink : public LogSink {
 public:
  explicit FileLogSink(const std::string& stem);
  ~FileLogSink() override;
  FileLogSink(const FileLogSink&) = delete;
  FileLogSink& operator=(const FileLogSink&) = delete;

  void event_line(const std::string& line) override;
  void telemetry_line(const std::string& line) override;

 private:
  struct Files;
  std::unique_ptr<Files> files_;
};

struct SessionFlags {
  bool body_stale = false;
  bool workspace_clamped = false;
  bool velocity_saturated = false;
  bool joint_limit_clamped = false;
};

enum class TrialStatus { Idle, Running, Completed, Aborted };
std::string to_string(TrialStatus s);

/// Internally consistent view of one control tick; telemetry rows and wire
/// snapshots share this shape.
struct OutboundSnapshot {
  std::string session_id;
  std::string config_hash;
  std::int64_t tick = 0;
  double t = 0.0;
  int trial = 0;
  ControlMode mode = ControlMode::Dual;
  Eigen::VectorXd joint_angles;
  Transform effector;          // T_{W→E_R}
  Transform desired;           // T_{W→E_R*}
  Transform desired_headset;   // E_R* in the headset frame, for display
  Transform body;              // T_{W→E_H}
  Vec3 link_body = Vec3::Zero();
  Vec3 joystick_velocity = Vec3::Zero();
  std::optional<Vec3> target;
  int target_index = -1;
  double tolerance_radius = 0.0;
  double dwell_progress = 0.0;
  TrialStatus status = TrialStatus::Idle;
  SessionFlags flags;
  bool event_tick = false;
};

/// `type` is "telemetry" for log rows and "snapshot" on the wire.
nlohmann::json to_json(const OutboundSnapshot& s, const std::string& type);
OutboundSnapshot snapshot_from_json(const nlohmann::json& j);

/// Inputs sampled for one tick. The body pose is in the world frame.
struct TickInputs {
  std::optional<BodyState> body;
  std::optional<JoystickSample> joystick;
};

struct TickResult {
  std::vector<TrialEvent> events;
  bool telemetry_tick = false;
};

/// Single-writer session state: control law, servo, trial. Time advances
/// by exactly one control period per tick (t = tick·dt), independent of
/// wall-clock time.
class Session {
 public:
  Session(const SessionConfig& cfg, SessionMeta meta, LogSink* sink);

  double time() const { return static_cast<double>(tick_) * dt_; }
  std::int64_t tick_index() const { return tick_; }
  ControlMode mode() const { return mode_; }
  const SessionConfig& config() const { return cfg_; }
  const SessionMeta& meta() const { return meta_; }

  /// Allowed only between trials; re-initializes the virtual link.
  bool set_mode(ControlMode mode);
  void start_trial();
  void abort_trial(const std::string& note);

  TickResult tick(const TickInputs& inputs);

  const BodyState& body() const { return body_; }
  const Transform& desired() const { return desired_; }
  const Transform& effector() const { return effector_; }
  const JointState& joints() const { return q_; }
  const ControlLaw& law() const { return law_; }
  const Trial* trial() const { return trial_ ? &*trial_ : nullptr; }
  bool trial_running() const { return trial_ && trial_->running(); }
  TrialStatus status() const { return status_; }
  int trial_count() const { return trial_count_; }

  /// x_{W→E_R*} − x_{W→E_H}: the pointer in world coordinates.
  Vec3 pointer_world() const { return desired_.translation - body_.world_from_body.translation; }

  OutboundSnapshot snapshot() const;

 private:
  void reinit_link();
  void write_events(const std::vector<TrialEvent>& events);
  void write_telemetry(bool event_tick);
  bool is_telemetry_tick(std::int64_t k) const;

  SessionConfig cfg_;
  SessionMeta meta_;
  LogSink* sink_;
  double dt_;
  std::int64_t tick_ = 0;
  ControlMode mode_;
  BodyState body_;
  double last_body_arrival_ = 0.0;
  JoystickSample joystick_;
  JointState q_;
  Transform effector_;
  Transform desired_;
  ControlLaw law_;
  std::optional<Trial> trial_;
  int trial_count_ = 0;
  TrialStatus status_ = TrialStatus::Idle;
  SessionFlags flags_;
};

}  // namespace bodylink
