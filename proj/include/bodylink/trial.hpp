#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bodylink/link_control.hpp"
#include "bodylink/se3.hpp"

namespace bodylink {

class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Slack for comparing accumulated tick timestamps against the dwell time.
inline constexpr double kTimeEpsilon = 1e-9;

struct TrialSpec {
  Vec3 center = Vec3::Zero();
  double sphere_radius = 0.15;     // m
  int n_pairs = 15;
  double tolerance_radius = 0.02;  // m
  double dwell_time = 1.0;         // s
  ControlMode mode = ControlMode::Dual;
  std::uint64_t seed = 0;
  bool shuffle_surface = false;    // seeded reordering of the surface points

  void validate() const;
};

nlohmann::json to_json(const TrialSpec& spec);
TrialSpec trial_spec_from_json(const nlohmann::json& j);

using TargetSequence = std::vector<Vec3>;

/// Offset Fibonacci lattice: z_i = 1 − 2(i+½)/n, azimuth i·π(3−√5).
std::vector<Vec3> fibonacci_sphere(int n, double radius, const Vec3& center);

/// surface₀, center, surface₁, center, …  (2·n_pairs entries).
TargetSequence build_sequence(const TrialSpec& spec);

enum class EventKind {
  TargetShown,
  ToleranceEntered,
  ToleranceExited,
  TargetValidated,
  TrialCompleted,
  TrialAborted,
};

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

struct TrialEvent {
  double timestamp = 0.0;
  EventKind kind = EventKind::TargetShown;
  int target_index = 0;
  Vec3 effector_position = Vec3::Zero();
  std::optional<Vec3> target_position;  // set on TargetShown
  std::string note;                     // diagnostics for TrialAborted
};

nlohmann::json to_json(const TrialEvent& e);
TrialEvent trial_event_from_json(const nlohmann::json& j);

struct CompletedTarget {
  int target_index = 0;
  double t_appear = 0.0;
  double t_validated = 0.0;
};

struct TrialState {
  int current_target_index = 0;
  std::optional<double> dwell_entered_at;
  std::vector<CompletedTarget> completed;
  double t_shown = 0.0;
  std::optional<double> last_t;
  bool started = false;
  bool finished = false;
};

/// Target protocol state machine. Validation needs the effector to stay in
/// the closed tolerance ball continuously for the dwell time; leaving the
/// ball resets the timer. The next target is shown at the validation time.
class Trial {
 public:
  explicit Trial(TrialSpec spec);

  const TrialSpec& spec() const { return spec_; }
  const TargetSequence& sequence() const { return sequence_; }
  const TrialState& state() const { return state_; }

  std::vector<TrialEvent> start(double t, const Vec3& effector_pos);
  std::vector<TrialEvent> update(const Vec3& effector_pos, double t);
  std::vector<TrialEvent> abort(double t, const Vec3& effector_pos, const std::string& note);

  bool running() const { return state_.started && !state_.finished; }
  std::optional<Vec3> current_target() const;
  /// Fraction of the dwell time spent in tolerance so far, in [0, 1].
  double dwell_progress(double t) const;

 private:
  TrialSpec spec_;
  TargetSequence sequence_;
  TrialState state_;
};

}  // namespace bodylink
