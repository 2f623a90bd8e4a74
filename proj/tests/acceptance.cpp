// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runs under ctest as the `acceptance` test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "bodylink/analysis.hpp"
#include "bodylink/arm.hpp"
#include "bodylink/batch.hpp"
#include "bodylink/config.hpp"
#include "bodylink/link_control.hpp"
#include "bodylink/simulate.hpp"
#include "bodylink/stats.hpp"
#include "bodylink/trial.hpp"

using namespace bodylink;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string src(const std::string& rel) { return std::string(BODYLINK_SOURCE_DIR) + "/" + rel; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bodylink_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const SessionConfig& config() {
  static const SessionConfig cfg = load_session_config(src("config/default.json"));
  return cfg;
}

// Simulated logs shared by criteria 5–7: three trials per policy.
const fs::path& simulated() {
  static const fs::path dir = [] {
    const fs::path d = scratch("sim");
    for (PolicyKind k : {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual}) {
      simulate_to_dir(config(), k, 3, 0, d.string());
    }
    return d;
  }();
  return dir;
}

Outcome mode_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const EquivalenceResult r = mode_equivalence_sweep_parallel(0, 100, 60.0, 0.01);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = r.joystick_divergence <= 1e-9 && r.body_divergence <= 1e-12 && secs < 10.0;
  return {ok, "joystick " + fmt(r.joystick_divergence) + " m, body " + fmt(r.body_divergence) + " m, " + fmt(secs) +
                  " s on " + std::to_string(parallel_threads()) + " thread(s)"};
}

Outcome servo_convergence() {
  const SerialArm arm = load_arm(src("config/arm_gen3_like.json"));
  ServoConfig cfg;
  cfg.gain_k = 0.5;
  cfg.dt = 1e-3;
  JointState q{arm.home, 0.0};
  Transform desired = forward_kinematics(arm, q);
  desired.translation += Vec3(0, 0.30, 0);
  double at4 = 0, at40 = 0;
  for (int step = 0; step <= 40000; ++step) {
    const double e = (desired.translation - forward_kinematics(arm, q).translation).norm();
    if (step == 4000) at4 = e;
    if (step == 40000) at40 = e;
    q = resolved_rate_step(arm, q, desired, cfg).state;
  }
  const double ratio = at4 / 0.30;
  const double rel = std::abs(ratio / std::exp(-2.0) - 1.0);
  return {rel <= 0.02 && at40 < 1e-4,
          "ratio(4 s) " + fmt(ratio) + " vs e^-2 " + fmt(std::exp(-2.0)) + " (" + fmt(100 * rel) + "%), error(40 s) " +
              fmt(at40) + " m"};
}

Outcome jacobian() {
  const SerialArm arm = load_arm(src("config/arm_gen3_like.json"));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double eps = 1e-6;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    JointState q{Eigen::VectorXd(arm.dof()), 0.0};
    for (int i = 0; i < arm.dof(); ++i) q.angles[i] = u(gen);
    const Jacobian j = geometric_jacobian(arm, q);
    for (int i = 0; i < arm.dof(); ++i) {
      JointState qp = q, qm = q;
      qp.angles[i] += eps;
      qm.angles[i] -= eps;
      const Transform p = forward_kinematics(arm, qp), m = forward_kinematics(arm, qm);
      // Rotation part from the quaternion of the relative rotation.
      Eigen::Quaterniond dq(Mat3(p.rotation.matrix() * m.rotation.matrix().transpose()));
      if (dq.w() < 0) dq.coeffs() *= -1.0;
      const double s = dq.vec().norm();
      const Vec3 w = s > 0 ? Vec3(2.0 * std::atan2(s, dq.w()) * dq.vec() / s) : Vec3::Zero();
      Twist fd;
      fd << (p.translation - m.translation) / (2 * eps), w / (2 * eps);
      worst = std::max(worst, (fd - j.col(i)).norm() / j.col(i).norm());
    }
  }
  return {worst <= 1e-5, "worst relative column error " + fmt(worst)};
}

Outcome lever() {
  const VirtualLink link = init_link({Transform::identity(), 0.0}, Transform::from_translation({1, 0, 0}));
  const Transform d = body_target(link, {Transform{Rotation::rz(0.1), Vec3::Zero()}, 0.0});
  const double disp = (d.translation - Vec3(1, 0, 0)).norm();
  return {std::abs(disp - 0.0999583) <= 1e-6, "displacement " + fmt(disp) + " m"};
}

Outcome protocol() {
  std::map<std::string, int> per_policy;
  std::size_t audited = 0;
  double worst_ct = 0;
  std::string problem;
  for (const std::string& path : expand_event_logs(simulated().string())) {
    const EventLog log = load_event_log(path);
    int validated = 0, completed = 0;
    std::optional<double> entered;
    for (const LoggedEvent& le : log.events) {
      const TrialEvent& e = le.event;
      switch (e.kind) {
        case EventKind::TargetShown: entered.reset(); break;
        case EventKind::ToleranceEntered: entered = e.timestamp; break;
        case EventKind::ToleranceExited: entered.reset(); break;
        case EventKind::TargetValidated:
          ++validated;
          ++audited;
          if (!entered || e.timestamp - *entered < log.header.spec.dwell_time - kTimeEpsilon) {
            problem = path + ": validation without 1 s continuous dwell";
          }
          entered.reset();
          break;
        case EventKind::TrialCompleted: ++completed; break;
        case EventKind::TrialAborted: problem = path + ": " + e.note; break;
      }
    }
    for (const TargetResult& r : completion_times(log)) worst_ct = std::max(worst_ct, r.completion_time);
    if (validated != 30 || completed != 1) problem = path + ": " + std::to_string(validated) + " validations";
    per_policy[log.header.policy] += 1;
    if (log.header.spec.sphere_radius != 0.15 || log.header.spec.tolerance_radius != 0.02 ||
        log.header.spec.dwell_time != 1.0 || log.header.spec.n_pairs != 15) {
      problem = path + ": trial spec differs from 15 cm / 2 cm / 1 s / 15 pairs";
    }
  }
  const bool ok = problem.empty() && per_policy.size() == 3 && worst_ct <= 60.0;
  return {ok, problem.empty() ? std::to_string(audited) + " validations audited over " +
                                    std::to_string(per_policy.size()) + " policies, slowest target " + fmt(worst_ct) + " s"
                              : problem};
}

Outcome contribution_identity() {
  double worst_sum = 0, worst_joy = 0, worst_body = 0;
  std::size_t axes = 0;
  for (const std::string& path : expand_event_logs(simulated().string())) {
    const LoadedSession s = load_session_logs(path);
    const std::string policy = s.events.header.policy;
    for (const ReachMetrics& r : analyze_trial(s.events, s.telemetry)) {
      const ContributionSeries& c = r.contribution;
      for (int a = 0; a < 3; ++a) {
        if (!c.valid[a]) continue;
        ++axes;
        const double b = c.b[a].back(), j = c.j[a].back();
        worst_sum = std::max(worst_sum, std::abs(b + j - 1.0));
        if (policy == "joystick-only") worst_joy = std::max(worst_joy, std::abs(j - 1.0));
        if (policy == "body-only") worst_body = std::max(worst_body, std::abs(b - 1.0));
      }
    }
  }
  // Joystick-only j is 1 up to rounding of R0ᵀR0; body-only b is bit-exact.
  const bool ok = axes > 0 && worst_sum <= 1e-9 && worst_joy <= 1e-12 && worst_body == 0.0;
  return {ok, std::to_string(axes) + " axes: |b+j-1| <= " + fmt(worst_sum) + ", joystick |j-1| <= " + fmt(worst_joy) +
                  ", body |b-1| = " + fmt(worst_body)};
}

Outcome sequential_echo() {
  AnalysisOptions opt;
  const AnalysisReport report = analyze_logs(expand_event_logs(simulated().string()), opt);
  const auto it = std::find_if(report.curves.begin(), report.curves.end(),
                               [](const ModeCurves& c) { return c.mode == "dual"; });
  if (it == report.curves.end()) return {false, "no dual-mode curves"};
  static const char* names[] = {"x", "y", "z"};
  bool ok = true;
  int checked = 0;
  std::string detail;
  for (int a = 0; a < 3; ++a) {
    if (it->axes[a].reaches == 0) continue;
    ++checked;
    const bool axis_ok = it->b_half[a] < it->j_half[a];
    ok = ok && axis_ok;
    detail += std::string(detail.empty() ? "" : ", ") + names[a] + ": b " + fmt(it->b_half[a]) + " < j " +
              fmt(it->j_half[a]);
  }
  return {ok && checked > 0, "half-time tau " + detail};
}

Outcome fibonacci() {
  const Vec3 c(0.4, -0.1, 1.0);
  const double r = 0.15;
  const auto pts = fibonacci_sphere(15, r, c);
  double radial = 0, min_sep = 10;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    radial = std::max(radial, std::abs((pts[i] - c).norm() - r));
    centroid += pts[i] / static_cast<double>(pts.size());
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = std::clamp((pts[i] - c).normalized().dot((pts[j] - c).normalized()), -1.0, 1.0);
      min_sep = std::min(min_sep, std::acos(d));
    }
  }
  const double off = (centroid - c).norm();
  return {pts.size() == 15 && radial <= 1e-12 && min_sep > 0.5 && off <= 0.05 * r,
          "radial error " + fmt(radial) + ", min separation " + fmt(min_sep) + " rad, centroid offset " + fmt(off / r) +
              " r"};
}

double brute_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

Outcome rank_statistics() {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> small(0, 4);
  double worst = 0;
  int cases = 0;
  for (int na = 1; na <= 9; ++na) {
    for (int nb = 1; na + nb <= 10; ++nb) {
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> a(static_cast<std::size_t>(na)), b(static_cast<std::size_t>(nb));
        for (double& x : a) x = small(gen);
        for (double& y : b) y = small(gen);
        std::vector<double> pooled = a;
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::vector<bool> pick(pooled.size(), false);
        std::fill(pick.end() - na, pick.end(), true);
        const double centre = na * nb / 2.0;
        const double obs = std::abs(brute_u(a, b) - centre);
        long total = 0, extreme = 0;
        do {
          std::vector<double> x, y;
          for (std::size_t i = 0; i < pooled.size(); ++i) (pick[i] ? x : y).push_back(pooled[i]);
          ++total;
          if (std::abs(brute_u(x, y) - centre) >= obs - 1e-9) ++extreme;
        } while (std::next_permutation(pick.begin(), pick.end()));
        worst = std::max(worst, std::abs(mann_whitney_exact_p(a, b) - static_cast<double>(extreme) / total));
        ++cases;
      }
    }
  }
  bool symmetric = true;
  std::uniform_int_distribution<int> size(1, 30);
  std::uniform_int_distribution<int> tied(0, 10);
  std::uniform_real_distribution<double> untied(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
    for (double& x : a) x = k % 2 ? tied(gen) : untied(gen);
    for (double& y : b) y = k % 2 ? tied(gen) : untied(gen);
    symmetric = symmetric && mann_whitney_u(a, b).u + mann_whitney_u(b, a).u ==
                                 static_cast<double>(a.size() * b.size());
  }
  const double bf = bonferroni(0.03, 2);
  return {worst <= 1e-12 && symmetric && std::abs(bf - 0.06) <= 1e-15,
          std::to_string(cases) + " exact cases, worst |p - enumeration| " + fmt(worst) + ", U symmetry " +
              (symmetric ? "holds" : "broken") + ", bonferroni(0.03, 2) = " + fmt(bf)};
}

Outcome determinism() {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& d : {a, b}) {
    for (PolicyKind k : {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual}) {
      simulate_to_dir(config(), k, 1, 42, (d / "runs").string());
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a / "runs")) {
    const fs::path other = b / "runs" / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
      return {false, e.path().filename().string() + " differs between runs"};
    }
    ++files;
  }
  for (const fs::path& d : {a, b}) {
    write_report(analyze_logs(expand_event_logs((d / "runs").string())), (d / "report").string());
  }
  std::size_t csvs = 0;
  for (const char* f : {"targets.csv", "contributions.csv", "contribution_curves.csv", "summary.csv", "tests.csv"}) {
    if (slurp(a / "report" / f) != slurp(b / "report" / f)) return {false, std::string(f) + " differs"};
    ++csvs;
  }
  return {files == 6, std::to_string(files) + " log files and " + std::to_string(csvs) + " CSVs byte-identical"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mode equivalence", mode_equivalence},
      {"servo convergence", servo_convergence},
      {"jacobian correctness", jacobian},
      {"lever amplification", lever},
      {"protocol fidelity", protocol},
      {"contribution identity", contribution_identity},
      {"sequential pattern", sequential_echo},
      {"fibonacci lattice", fibonacci},
      {"rank statistics", rank_statistics},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
