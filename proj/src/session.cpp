#include "bodylink/session.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bodylink {

struct FileLogSink::Files {
  std::ofstream events;
  std::ofstream telemetry;
};

FileLogSink::FileLogSink(const std::string& stem) : files_(std::make_unique<Files>()) {
  const std::filesystem::path parent = std::filesystem::path(stem).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  files_->events.open(stem + ".events.jsonl", std::ios::binary | std::ios::trunc);
  files_->telemetry.open(stem + ".telemetry.jsonl", std::ios::binary | std::ios::trunc);
  if (!files_->events || !files_->telemetry) throw std::runtime_error("cannot open log files for " + stem);
}

FileLogSink::~FileLogSink() = default;

void FileLogSink::event_line(const std::string& line) {
  files_->events << line << '\n';
  files_->events.flush();
}

void FileLogSink::telemetry_line(const std::string& line) { files_->telemetry << line << '\n'; }

std::string to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Idle: return "idle";
    case TrialStatus::Running: return "running";
    case TrialStatus::Completed: return "completed";
    case TrialStatus::Aborted: return "aborted";
  }
  return "idle";
}

namespace {

TrialStatus trial_status_from_string(const std::string& s) {
  for (TrialStatus st : {TrialStatus::Idle, TrialStatus::Running, TrialStatus::Completed, TrialStatus::Aborted}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown trial status '" + s + "'");
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

nlohmann::json to_json(const OutboundSnapshot& s, const std::string& type) {
  return {{"type", type},
          {"session", s.session_id},
          {"config_hash", s.config_hash},
          {"tick", s.tick},
          {"t", s.t},
          {"trial", s.trial},
          {"mode", to_string(s.mode)},
          {"q", vector_to_json(s.joint_angles)},
          {"effector", to_json(s.effector)},
          {"desired", to_json(s.desired)},
          {"desired_headset", to_json(s.desired_headset)},
          {"body", to_json(s.body)},
          {"link_body", to_json(s.link_body)},
          {"joystick_velocity", to_json(s.joystick_velocity)},
          {"target", s.target ? to_json(*s.target) : nlohmann::json(nullptr)},
          {"target_index", s.target_index},
          {"tolerance", s.tolerance_radius},
          {"dwell_progress", s.dwell_progress},
          {"status", to_string(s.status)},
          {"flags",
           {{"body_stale", s.flags.body_stale},
            {"workspace_clamped", s.flags.workspace_clamped},
            {"velocity_saturated", s.flags.velocity_saturated},
            {"joint_limit_clamped", s.flags.joint_limit_clamped}}},
          {"event", s.event_tick}};
}

OutboundSnapshot snapshot_from_json(const nlohmann::json& j) {
  OutboundSnapshot s;
  s.session_id = j.at("session").get<std::string>();
  s.config_hash = j.at("config_hash").get<std::string>();
  s.tick = j.at("tick").get<std::int64_t>();
  s.t = j.at("t").get<double>();
  s.trial = j.at("trial").get<int>();
  s.mode = control_mode_from_string(j.at("mode").get<std::string>());
  const auto& q = j.at("q");
  s.joint_angles.resize(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) s.joint_angles[static_cast<Eigen::Index>(i)] = q[i].get<double>();
  s.effector = transform_from_json(j.at("effector"));
  s.desired = transform_from_json(j.at("desired"));
  s.desired_headset = transform_from_json(j.at("desired_headset"));
  s.body = transform_from_json(j.at("body"));
  s.link_body = vec3_from_json(j.at("link_body"));
  s.joystick_velocity = vec3_from_json(j.at("joystick_velocity"));
  if (!j.at("target").is_null()) s.target = vec3_from_json(j.at("target"));
  s.target_index = j.at("target_index").get<int>();
  s.tolerance_radius = j.at("tolerance").get<double>();
  s.dwell_progress = j.at("dwell_progress").get<double>();
  s.status = trial_status_from_string(j.at("status").get<std::string>());
  const auto& f = j.at("flags");
  s.flags.body_stale = f.at("body_stale").get<bool>();
  s.flags.workspace_clamped = f.at("workspace_clamped").get<bool>();
  s.flags.velocity_saturated = f.at("velocity_saturated").get<bool>();
  s.flags.joint_limit_clamped = f.at("joint_limit_clamped").get<bool>();
  s.event_tick = j.value("event", false);
  return s;
}

namespace {

nlohmann::json log_header(const SessionConfig& cfg, const SessionMeta& meta, const std::string& log,
                          ControlMode mode) {
  return {{"type", "header"},
          {"log", log},
          {"schema_version", kLogSchemaVersion},
          {"session", meta.session_id},
          {"config_hash", meta.config_hash},
          {"participant_id", meta.participant_id},
          {"policy", meta.policy},
          {"mode", to_string(mode)},
          {"dt", cfg.dt()},
          {"tick_rate_telemetry", cfg.tick_rate_telemetry},
          {"spec", to_json(cfg.trial)}};
}

}  // namespace

Session::Session(const SessionConfig& cfg, SessionMeta meta, LogSink* sink)
    : cfg_(cfg),
      meta_(std::move(meta)),
      sink_(sink),
      dt_(cfg.dt()),
      mode_(cfg.mode.mode),
      body_{cfg.initial_body_world(), 0.0},
      q_{cfg.arm.home, 0.0},
      effector_(forward_kinematics(cfg.arm, q_)),
      desired_(effector_),
      law_(mode_, body_, effector_) {
  cfg_.servo.dt = dt_;
  if (meta_.config_hash.empty()) meta_.config_hash = cfg_.config_hash;
  if (sink_) {
    sink_->event_line(log_header(cfg_, meta_, "events", mode_).dump());
    sink_->telemetry_line(log_header(cfg_, meta_, "telemetry", mode_).dump());
  }
}

bool Session::set_mode(ControlMode mode) {
  if (trial_running()) return false;
  mode_ = mode;
  reinit_link();
  return true;
}

void Session::reinit_link() {
  law_ = ControlLaw(mode_, body_, effector_);
  desired_ = law_.update(body_, JoystickSample{Vec3::Zero(), time()}, 0.0);
}

void Session::start_trial() {
  if (trial_running()) throw SequencingError("a trial is already running");
  TrialSpec spec = cfg_.trial;
  spec.mode = mode_;
  trial_.emplace(spec);
  ++trial_count_;
  status_ = TrialStatus::Running;
  reinit_link();
  write_events(trial_->start(time(), effector_.translation));
  write_telemetry(true);
}

void Session::abort_trial(const std::string& note) {
  if (!trial_running()) return;
  write_events(trial_->abort(time(), effector_.translation, note));
  status_ = TrialStatus::Aborted;
  write_telemetry(true);
}

bool Session::is_telemetry_tick(std::int64_t k) const {
  const double ratio = cfg_.tick_rate_telemetry / cfg_.tick_rate_control;
  return std::floor(static_cast<double>(k) * ratio + 1e-9) != std::floor(static_cast<double>(k - 1) * ratio + 1e-9);
}

TickResult Session::tick(const TickInputs& inputs) {
  ++tick_;
  const double t = time();
  flags_ = SessionFlags{};

  if (inputs.body) {
    body_ = *inputs.body;
    last_body_arrival_ = t;
  }
  if (inputs.joystick) joystick_ = *inputs.joystick;

  const bool needs_body = mode_ != ControlMode::Joystick;
  if (needs_body && t - last_body_arrival_ > cfg_.body_timeout + kTimeEpsilon) {
    // Hold the last desired pose until the body stream resumes.
    flags_.body_stale = true;
  } else {
    desired_ = law_.update(body_, joystick_, dt_);
    const Vec3 clamped = cfg_.servo.workspace_box.clamp(desired_.translation);
    if (clamped != desired_.translation) {
      law_.absorb_clamp(body_, clamped);
      desired_.translation = clamped;
      flags_.workspace_clamped = true;
    }
  }

  const ServoStep step = resolved_rate_step(cfg_.arm, q_, desired_, cfg_.servo);
  q_ = step.state;
  q_.timestamp = t;
  flags_.velocity_saturated = step.flags.velocity_saturated;
  flags_.joint_limit_clamped = step.flags.joint_limit_clamped;
  flags_.workspace_clamped = flags_.workspace_clamped || step.flags.workspace_clamped;
  effector_ = forward_kinematics(cfg_.arm, q_);

  TickResult result;
  if (trial_running()) {
    result.events = trial_->update(effector_.translation, t);
    if (!trial_->running()) status_ = TrialStatus::Completed;
    write_events(result.events);
  }
  result.telemetry_tick = is_telemetry_tick(tick_);
  if (result.telemetry_tick || !result.events.empty()) write_telemetry(!result.events.empty());
  return result;
}

void Session::write_events(const std::vector<TrialEvent>& events) {
  if (!sink_) return;
  for (const TrialEvent& e : events) {
    nlohmann::json j = to_json(e);
    j["type"] = "event";
    j["session"] = meta_.session_id;
    j["config_hash"] = meta_.config_hash;
    j["trial"] = trial_count_;
    j["mode"] = to_string(mode_);
    sink_->event_line(j.dump());
  }
}

void Session::write_telemetry(bool event_tick) {
  if (!sink_) return;
  OutboundSnapshot s = snapshot();
  s.event_tick = event_tick;
  sink_->telemetry_line(to_json(s, "telemetry").dump());
}

OutboundSnapshot Session::snapshot() const {
  OutboundSnapshot s;
  s.session_id = meta_.session_id;
  s.config_hash = meta_.config_hash;
  s.tick = tick_;
  s.t = time();
  s.trial = trial_count_;
  s.mode = mode_;
  s.joint_angles = q_.angles;
  s.effector = effector_;
  s.desired = desired_;
  s.desired_headset = compose(inverse(cfg_.registry.world_from_headset), desired_);
  s.body = body_.world_from_body;
  s.link_body = law_.effective_link(body_, desired_.translation);
  s.joystick_velocity = joystick_.velocity_world;
  if (trial_) {
    s.target = trial_->current_target();
    s.target_index = trial_->running() ? trial_->state().current_target_index : -1;
    s.tolerance_radius = trial_->spec().tolerance_radius;
    s.dwell_progress = trial_->dwell_progress(s.t);
  }
  s.status = status_;
  s.flags = flags_;
  return s;
}

}  // namespace bodylink
