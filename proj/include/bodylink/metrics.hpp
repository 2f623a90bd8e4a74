#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "bodylink/logs.hpp"
#include "bodylink/se3.hpp"
#include "bodylink/session.hpp"

namespace bodylink {

/// Axes whose total effector displacement stays below this are masked out
/// of the contribution analysis (m, the task tolerance).
inline constexpr double kContributionMinDisplacement = 0.02;

struct TargetResult {
  std::string trial_id;
  std::string participant_id;
  std::string mode;
  int trial = 0;
  int target_index = 0;
  double t_shown = 0.0;
  double t_validated = 0.0;
  double completion_time = 0.0;
};

/// One result per TargetValidated, timed from the matching TargetShown.
/// Throws LogFormatError naming the line of a validation with no matching
/// TargetShown.
std::vector<TargetResult> completion_times(const EventLog& log);

/// Componentwise absolute displacement of the body frame between two
/// instants, expressed in the body frame at the first instant.
struct BodyDisplacement {
  std::array<double, 3> translation{};  // X forward/back, Y sideways, Z up/down (m)
  std::array<double, 3> rotation{};     // α, β, γ (rad)
};

BodyDisplacement total_body_displacement(const Transform& body_at_t0, const Transform& body_at_tf);

/// Path-length variant: sums the componentwise absolute increments between
/// consecutive telemetry rows in [t0, tf]. Not a substitute for the
/// endpoint measure above.
BodyDisplacement body_path_length(std::span<const OutboundSnapshot> rows, double t0, double tf);

/// Per-axis body/joystick shares of the virtual effector displacement over
/// one reach, in the body frame at t0.
struct ContributionSeries {
  std::vector<double> t;
  std::array<std::vector<double>, 3> b;  // NaN on masked axes
  std::array<std::vector<double>, 3> j;
  std::array<bool, 3> valid{};
  Vec3 delta_tf = Vec3::Zero();  // total displacement at tf
  Vec3 joystick_tf = Vec3::Zero();
};

/// Telemetry rows must include samples at t0 and tf (event ticks always do).
ContributionSeries contribution_series(std::span<const OutboundSnapshot> rows, double t0, double tf,
                                       double min_displacement = kContributionMinDisplacement);

struct ReachMetrics {
  TargetResult result;
  BodyDisplacement tbd;
  ContributionSeries contribution;
};

/// Joins an event log with its telemetry and computes all per-target
/// metrics. Trials are matched by trial number.
std::vector<ReachMetrics> analyze_trial(const EventLog& events, const TelemetryLog& telemetry);

/// Median over reaches of b(τ) and j(τ) on a normalized time grid τ ∈ [0,1].
/// Reaches where the axis is masked are skipped.
struct MedianCurve {
  std::vector<double> tau;
  std::vector<double> b;
  std::vector<double> j;
  std::size_t reaches = 0;
};

MedianCurve median_contribution_curve(std::span<const ContributionSeries> series, int axis, int grid_points = 101);

/// First grid time at which curve/curve.back() ≥ fraction, or NaN when the
/// final value is zero.
double time_to_fraction(const std::vector<double>& tau, const std::vector<double>& curve, double fraction);

}  // namespace bodylink
