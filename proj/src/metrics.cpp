#include "bodylink/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "bodylink/stats.hpp"

namespace bodylink {

namespace {

// Telemetry timestamps are tick·dt; two rows from the same tick compare
// equal, rows from adjacent ticks differ by at least dt.
constexpr double kRowMatch = 1e-9;

std::vector<const OutboundSnapshot*> rows_in(std::span<const OutboundSnapshot> rows, double t0, double tf,
                                             const int* trial = nullptr) {
  std::vector<const OutboundSnapshot*> out;
  for (const OutboundSnapshot& r : rows) {
    if (trial && r.trial != *trial) continue;
    if (r.t >= t0 - kRowMatch && r.t <= tf + kRowMatch) out.push_back(&r);
  }
  return out;
}

double linear_at(const std::vector<double>& t, const std::vector<double>& y, double x) {
  if (x <= t.front()) return y.front();
  if (x >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - t.begin());
  const std::size_t lo = hi - 1;
  const double span = t[hi] - t[lo];
  if (span <= 0.0) return y[hi];
  const double w = (x - t[lo]) / span;
  return y[lo] + w * (y[hi] - y[lo]);
}

}  // namespace

std::vector<TargetResult> completion_times(const EventLog& log) {
  std::vector<TargetResult> out;
  // Keyed by (trial, target index); reset when a trial restarts.
  std::map<std::pair<int, int>, double> shown;
  for (const LoggedEvent& le : log.events) {
    const TrialEvent& e = le.event;
    const auto key = std::make_pair(le.trial, e.target_index);
    if (e.kind == EventKind::TargetShown) {
      shown[key] = e.timestamp;
    } else if (e.kind == EventKind::TargetValidated) {
      const auto it = shown.find(key);
      if (it == shown.end()) {
        throw LogFormatError(log.path + ":" + std::to_string(le.line) + ": TargetValidated for target " +
                             std::to_string(e.target_index) + " of trial " + std::to_string(le.trial) +
                             " has no preceding TargetShown");
      }
      TargetResult r;
      r.trial_id = log.header.session_id + "/" + std::to_string(le.trial);
      r.participant_id = log.header.participant_id;
      r.mode = le.mode;
      r.trial = le.trial;
      r.target_index = e.target_index;
      r.t_shown = it->second;
      r.t_validated = e.timestamp;
      r.completion_time = e.timestamp - it->second;
      out.push_back(r);
      shown.erase(it);
    }
  }
  return out;
}

BodyDisplacement total_body_displacement(const Transform& body_at_t0, const Transform& body_at_tf) {
  const Transform rel = compose(inverse(body_at_t0), body_at_tf);
  const Vec3 aa = angle_axis(rel.rotation);
  BodyDisplacement d;
  for (int i = 0; i < 3; ++i) {
    d.translation[i] = std::abs(rel.translation[i]);
    d.rotation[i] = std::abs(aa[i]);
  }
  return d;
}

BodyDisplacement body_path_length(std::span<const OutboundSnapshot> rows, double t0, double tf) {
  const auto in = rows_in(rows, t0, tf);
  BodyDisplacement d;
  for (std::size_t k = 1; k < in.size(); ++k) {
    const BodyDisplacement step = total_body_displacement(in[k - 1]->body, in[k]->body);
    for (int i = 0; i < 3; ++i) {
      d.translation[i] += step.translation[i];
      d.rotation[i] += step.rotation[i];
    }
  }
  return d;
}

ContributionSeries contribution_series(std::span<const OutboundSnapshot> rows, double t0, double tf,
                                       double min_displacement) {
  if (!(tf >= t0)) throw std::invalid_argument("contribution window must satisfy t0 <= tf");
  const auto in = rows_in(rows, t0, tf);
  if (in.empty() || std::abs(in.front()->t - t0) > kRowMatch || std::abs(in.back()->t - tf) > kRowMatch) {
    throw std::invalid_argument("telemetry does not cover the reach window [" + std::to_string(t0) + ", " +
                                std::to_string(tf) + "]");
  }
  const OutboundSnapshot& first = *in.front();
  const Mat3 r0t = first.body.rotation.matrix().transpose();
  const Vec3 x0 = first.desired.translation;
  const Vec3 l0 = first.link_body;

  ContributionSeries s;
  std::vector<Vec3> delta;
  std::vector<Vec3> delta_j;
  for (const OutboundSnapshot* r : in) {
    s.t.push_back(r->t);
    delta.push_back(r0t * (r->desired.translation - x0));
    delta_j.push_back(r->link_body - l0);
  }
  s.delta_tf = delta.back();
  s.joystick_tf = delta_j.back();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int a = 0; a < 3; ++a) {
    const double denom = s.delta_tf[a];
    s.valid[a] = std::abs(denom) >= min_displacement;
    s.b[a].resize(in.size());
    s.j[a].resize(in.size());
    for (std::size_t k = 0; k < in.size(); ++k) {
      if (!s.valid[a]) {
        s.b[a][k] = nan;
        s.j[a][k] = nan;
        continue;
      }
      const double dj = delta_j[k][a];
      const double db = delta[k][a] - dj;
      s.b[a][k] = db / denom;
      s.j[a][k] = dj / denom;
    }
  }
  return s;
}

std::vector<ReachMetrics> analyze_trial(const EventLog& events, const TelemetryLog& telemetry) {
  std::vector<ReachMetrics> out;
  for (const TargetResult& r : completion_times(events)) {
    const int trial = r.trial;
    const auto in = rows_in(telemetry.rows, r.t_shown, r.t_validated, &trial);
    if (in.empty() || std::abs(in.front()->t - r.t_shown) > kRowMatch ||
        std::abs(in.back()->t - r.t_validated) > kRowMatch) {
      throw LogFormatError(telemetry.path + ": no telemetry rows at t=" + std::to_string(r.t_shown) + " and t=" +
                           std::to_string(r.t_validated) + " for trial " + std::to_string(trial) + " target " +
                           std::to_string(r.target_index));
    }
    std::vector<OutboundSnapshot> window;
    window.reserve(in.size());
    for (const OutboundSnapshot* p : in) window.push_back(*p);
    ReachMetrics m;
    m.result = r;
    m.tbd = total_body_displacement(window.front().body, window.back().body);
    m.contribution = contribution_series(window, r.t_shown, r.t_validated);
    out.push_back(std::move(m));
  }
  return out;
}

MedianCurve median_contribution_curve(std::span<const ContributionSeries> series, int axis, int grid_points) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
  if (grid_points < 2) throw std::invalid_argument("need at least two grid points");
  MedianCurve c;
  c.tau.resize(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) c.tau[static_cast<std::size_t>(i)] = static_cast<double>(i) / (grid_points - 1);

  std::vector<std::vector<double>> bs;
  std::vector<std::vector<double>> js;
  for (const ContributionSeries& s : series) {
    if (!s.valid[axis] || s.t.size() < 2) continue;
    const double t0 = s.t.front();
    const double span = s.t.back() - t0;
    std::vector<double> tau(s.t.size());
    for (std::size_t k = 0; k < s.t.size(); ++k) tau[k] = (s.t[k] - t0) / span;
    std::vector<double> b(c.tau.size());
    std::vector<double> j(c.tau.size());
    for (std::size_t g = 0; g < c.tau.size(); ++g) {
      b[g] = linear_at(tau, s.b[axis], c.tau[g]);
      j[g] = linear_at(tau, s.j[axis], c.tau[g]);
    }
    bs.push_back(std::move(b));
    js.push_back(std::move(j));
  }
  c.reaches = bs.size();
  if (bs.empty()) return c;
  c.b.resize(c.tau.size());
  c.j.resize(c.tau.size());
  std::vector<double> col(bs.size());
  for (std::size_t g = 0; g < c.tau.size(); ++g) {
    for (std::size_t k = 0; k < bs.size(); ++k) col[k] = bs[k][g];
    c.b[g] = quantile(col, 0.5);
    for (std::size_t k = 0; k < js.size(); ++k) col[k] = js[k][g];
    c.j[g] = quantile(col, 0.5);
  }
  return c;
}

double time_to_fraction(const std::vector<double>& tau, const std::vector<double>& curve, double fraction) {
  if (curve.empty() || tau.size() != curve.size()) throw std::invalid_argument("curve and grid sizes differ");
  const double final_value = curve.back();
  if (final_value == 0.0) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t g = 0; g < curve.size(); ++g) {
    if (curve[g] / final_value >= fraction) return tau[g];
  }
  return tau.back();
}

}  // namespace bodylink
