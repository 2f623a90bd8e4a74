#include "bodylink/batch.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bodylink {

std::vector<TrialRunResult> run_trials_serial(const SessionConfig& cfg, const std::vector<TrialJob>& jobs) {
  std::vector<TrialRunResult> out;
  out.reserve(jobs.size());
  for (const TrialJob& job : jobs) out.push_back(run_trial(job.policy, cfg, job.mode, job.session_id));
  return out;
}

std::vector<TrialRunResult> run_trials_parallel(const SessionConfig& cfg, const std::vector<TrialJob>& jobs) {
  const auto n = static_cast<std::int64_t>(jobs.size());
  std::vector<TrialRunResult> out(jobs.size());
  std::vector<std::string> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = run_trial(jobs[k].policy, cfg, jobs[k].mode, jobs[k].session_id);
    } catch (const std::exception& e) {
      errors[k] = jobs[k].session_id + ": " + e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return out;
}

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  // Top 53 bits, so the stream is identical across standard libraries.
  double operator()() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }
  Vec3 vec(double half_width) {
    return Vec3((*this)(-half_width, half_width), (*this)(-half_width, half_width), (*this)(-half_width, half_width));
  }

 private:
  std::mt19937_64 gen_;
};

Transform random_pose(Uniform& u, double spread) {
  Transform t;
  t.rotation = from_angle_axis(u.vec(1.5));
  t.translation = u.vec(spread);
  return t;
}

}  // namespace

EquivalenceResult mode_equivalence_case(std::uint64_t seed, double duration, double dt) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw std::invalid_argument("duration and dt must be positive");
  Uniform u(seed);
  const BodyState body0{random_pose(u, 1.0), 0.0};
  const Transform effector0 = random_pose(u, 1.5);
  const auto ticks = static_cast<std::int64_t>(std::llround(duration / dt));
  // Input changes every `hold` ticks, like a human on a 100 Hz loop.
  const std::int64_t hold = 10;

  EquivalenceResult r;
  {
    VirtualLink dual = init_link(body0, effector0);
    const VirtualLink joy = init_link(body0, effector0);
    Vec3 acc = Vec3::Zero();
    JoystickSample s;
    for (std::int64_t k = 1; k <= ticks; ++k) {
      if ((k - 1) % hold == 0) s.velocity_world = u.vec(0.25);
      s.timestamp = static_cast<double>(k) * dt;
      const JoystickTarget jt = joystick_target(joy, acc, s, dt);
      acc = jt.accumulated;
      const Transform d = dual_target(dual, body0, s, dt);
      r.joystick_divergence = std::max(r.joystick_divergence, max_abs_diff(d, jt.desired));
    }
  }
  {
    VirtualLink dual = init_link(body0, effector0);
    const VirtualLink rigid = init_link(body0, effector0);
    BodyState body = body0;
    Vec3 omega = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    const JoystickSample none{};
    for (std::int64_t k = 1; k <= ticks; ++k) {
      if ((k - 1) % hold == 0) {
        omega = u.vec(0.8);
        vel = u.vec(0.15);
      }
      body.world_from_body.rotation = from_angle_axis(omega * dt) * body.world_from_body.rotation;
      body.world_from_body.translation += vel * dt;
      body.timestamp = static_cast<double>(k) * dt;
      const Transform d = dual_target(dual, body, none, dt);
      const Transform b = body_target(rigid, body);
      r.body_divergence = std::max(r.body_divergence, max_abs_diff(d, b));
    }
  }
  return r;
}

EquivalenceResult mode_equivalence_sweep_serial(std::uint64_t first_seed, int cases, double duration, double dt) {
  EquivalenceResult worst;
  for (int i = 0; i < cases; ++i) {
    const EquivalenceResult r = mode_equivalence_case(first_seed + static_cast<std::uint64_t>(i), duration, dt);
    worst.joystick_divergence = std::max(worst.joystick_divergence, r.joystick_divergence);
    worst.body_divergence = std::max(worst.body_divergence, r.body_divergence);
  }
  return worst;
}

EquivalenceResult mode_equivalence_sweep_parallel(std::uint64_t first_seed, int cases, double duration, double dt) {
  double joy = 0.0;
  double body = 0.0;
#pragma omp parallel for reduction(max : joy, body) schedule(static)
  for (int i = 0; i < cases; ++i) {
    const EquivalenceResult r = mode_equivalence_case(first_seed + static_cast<std::uint64_t>(i), duration, dt);
    joy = std::max(joy, r.joystick_divergence);
    body = std::max(body, r.body_divergence);
  }
  return {joy, body};
}

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bodylink
