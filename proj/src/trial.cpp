#include "bodylink/trial.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace bodylink {

void TrialSpec::validate() const {
  if (!(sphere_radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  if (!(tolerance_radius > 0.0 && tolerance_radius < sphere_radius)) {
    throw std::invalid_argument("tolerance radius must be positive and smaller than the sphere radius");
  }
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
  if (!(dwell_time > 0.0)) throw std::invalid_argument("dwell time must be positive");
}

nlohmann::json to_json(const TrialSpec& spec) {
  return {{"center", to_json(spec.center)},
          {"sphere_radius", spec.sphere_radius},
          {"n_pairs", spec.n_pairs},
          {"tolerance_radius", spec.tolerance_radius},
          {"dwell_time", spec.dwell_time},
          {"mode", to_string(spec.mode)},
          {"seed", spec.seed},
          {"shuffle_surface", spec.shuffle_surface}};
}

TrialSpec trial_spec_from_json(const nlohmann::json& j) {
  TrialSpec spec;
  if (j.contains("center") && !j.at("center").is_null()) spec.center = vec3_from_json(j.at("center"));
  spec.sphere_radius = j.value("sphere_radius", spec.sphere_radius);
  spec.n_pairs = j.value("n_pairs", spec.n_pairs);
  spec.tolerance_radius = j.value("tolerance_radius", spec.tolerance_radius);
  spec.dwell_time = j.value("dwell_time", spec.dwell_time);
  if (j.contains("mode")) spec.mode = control_mode_from_string(j.at("mode").get<std::string>());
  spec.seed = j.value("seed", spec.seed);
  spec.shuffle_surface = j.value("shuffle_surface", spec.shuffle_surface);
  spec.validate();
  return spec;
}

std::vector<Vec3> fibonacci_sphere(int n, double radius, const Vec3& center) {
  if (n < 1) throw std::invalid_argument("fibonacci_sphere needs n >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("fibonacci_sphere needs a positive radius");
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = i * golden_angle;
    points.push_back(center + radius * Vec3(r * std::cos(phi), r * std::sin(phi), z));
  }
  return points;
}

TargetSequence build_sequence(const TrialSpec& spec) {
  spec.validate();
  std::vector<Vec3> surface = fibonacci_sphere(spec.n_pairs, spec.sphere_radius, spec.center);
  if (spec.shuffle_surface) {
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = surface.size(); i > 1; --i) {
      std::swap(surface[i - 1], surface[static_cast<std::size_t>(rng() % i)]);
    }
  }
  TargetSequence seq;
  seq.reserve(surface.size() * 2);
  for (const Vec3& p : surface) {
    seq.push_back(p);
    seq.push_back(spec.center);
  }
  return seq;
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TargetShown: return "TargetShown";
    case EventKind::ToleranceEntered: return "ToleranceEntered";
    case EventKind::ToleranceExited: return "ToleranceExited";
    case EventKind::TargetValidated: return "TargetValidated";
    case EventKind::TrialCompleted: return "TrialCompleted";
    case EventKind::TrialAborted: return "TrialAborted";
  }
  return "Unknown";
}

EventKind event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::TargetShown, EventKind::ToleranceEntered, EventKind::ToleranceExited,
                      EventKind::TargetValidated, EventKind::TrialCompleted, EventKind::TrialAborted}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown trial event kind '" + s + "'");
}

nlohmann::json to_json(const TrialEvent& e) {
  nlohmann::json j = {{"t", e.timestamp},
                      {"kind", to_string(e.kind)},
                      {"target_index", e.target_index},
                      {"effector_position", to_json(e.effector_position)}};
  if (e.target_position) j["target_position"] = to_json(*e.target_position);
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

TrialEvent trial_event_from_json(const nlohmann::json& j) {
  TrialEvent e;
  e.timestamp = j.at("t").get<double>();
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.target_index = j.at("target_index").get<int>();
  e.effector_position = vec3_from_json(j.at("effector_position"));
  if (j.contains("target_position")) e.target_position = vec3_from_json(j.at("target_position"));
  e.note = j.value("note", std::string());
  return e;
}

Trial::Trial(TrialSpec spec) : spec_(std::move(spec)), sequence_(build_sequence(spec_)) {}

std::optional<Vec3> Trial::current_target() const {
  if (!running()) return std::nullopt;
  return sequence_[static_cast<std::size_t>(state_.current_target_index)];
}

double Trial::dwell_progress(double t) const {
  if (!running() || !state_.dwell_entered_at) return 0.0;
  return std::clamp((t - *state_.dwell_entered_at) / spec_.dwell_time, 0.0, 1.0);
}

std::vector<TrialEvent> Trial::start(double t, const Vec3& effector_pos) {
  if (state_.started) throw SequencingError("trial already started");
  state_ = TrialState{};
  state_.started = true;
  state_.t_shown = t;
  state_.last_t = t;
  TrialEvent shown{t, EventKind::TargetShown, 0, effector_pos, sequence_.front(), {}};
  return {shown};
}

std::vector<TrialEvent> Trial::update(const Vec3& effector_pos, double t) {
  if (!running()) throw SequencingError("trial is not running");
  if (state_.last_t && t < *state_.last_t) {
    throw SequencingError("non-monotone timestamp " + std::to_string(t) + " after " +
                          std::to_string(*state_.last_t));
  }
  state_.last_t = t;

  std::vector<TrialEvent> events;
  const int idx = state_.current_target_index;
  const Vec3& target = sequence_[static_cast<std::size_t>(idx)];
  const bool inside = (effector_pos - target).norm() <= spec_.tolerance_radius;

  if (inside && !state_.dwell_entered_at) {
    state_.dwell_entered_at = t;
    events.push_back({t, EventKind::ToleranceEntered, idx, effector_pos, std::nullopt, {}});
  } else if (!inside && state_.dwell_entered_at) {
    state_.dwell_entered_at.reset();
    events.push_back({t, EventKind::ToleranceExited, idx, effector_pos, std::nullopt, {}});
  }

  if (inside && t - *state_.dwell_entered_at >= spec_.dwell_time - kTimeEpsilon) {
    events.push_back({t, EventKind::TargetValidated, idx, effector_pos, std::nullopt, {}});
    state_.completed.push_back({idx, state_.t_shown, t});
    state_.dwell_entered_at.reset();
    if (idx + 1 == static_cast<int>(sequence_.size())) {
      state_.finished = true;
      events.push_back({t, EventKind::TrialCompleted, idx, effector_pos, std::nullopt, {}});
    } else {
      state_.current_target_index = idx + 1;
      state_.t_shown = t;
      events.push_back({t, EventKind::TargetShown, idx + 1, effector_pos,
                        sequence_[static_cast<std::size_t>(idx + 1)], {}});
    }
  }
  return events;
}

std::vector<TrialEvent> Trial::abort(double t, const Vec3& effector_pos, const std::string& note) {
  if (!running()) return {};
  state_.finished = true;
  return {{t, EventKind::TrialAborted, state_.current_target_index, effector_pos, std::nullopt, note}};
}

}  // namespace bodylink
