#include "bodylink/analysis.hpp"
#include "bodylink/batch.hpp"
#include "bodylink/simulate.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bodylink;

TEST_CASE("parallel trial batch is byte-identical to the serial reference") {
  SessionConfig cfg = testsupport::default_config();
  cfg.trial.n_pairs = 2;
  std::vector<TrialJob> jobs;
  for (PolicyKind k : {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual}) {
    const auto some = simulation_jobs(cfg, k, 3, 11);
    jobs.insert(jobs.end(), some.begin(), some.end());
  }
  REQUIRE(jobs.size() == 9);
  const auto serial = run_trials_serial(cfg, jobs);
  const auto parallel = run_trials_parallel(cfg, jobs);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].session_id == jobs[i].session_id);
    CHECK(serial[i].session_id == parallel[i].session_id);
    CHECK(serial[i].event_lines == parallel[i].event_lines);
    CHECK(serial[i].telemetry_lines == parallel[i].telemetry_lines);
    CHECK(serial[i].completed);
  }
}

TEST_CASE("simulation jobs have distinct ids and seeds") {
  const SessionConfig& cfg = testsupport::default_config();
  const auto jobs = simulation_jobs(cfg, PolicyKind::BodyOnly, 4, 2);
  REQUIRE(jobs.size() == 4);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CHECK(jobs[i].mode == ControlMode::Body);
    CHECK(jobs[i].session_id == simulation_session_id(cfg.config_hash, PolicyKind::BodyOnly, 2, static_cast<int>(i)));
    for (std::size_t k = 0; k < i; ++k) CHECK(jobs[i].policy.noise_seed != jobs[k].policy.noise_seed);
  }
  CHECK(jobs[0].session_id.rfind("sim-" + cfg.config_hash.substr(0, 8) + "-body-only-s2-t0", 0) == 0);
}

TEST_CASE("equivalence sweep: serial and parallel agree and stay within bounds") {
  const EquivalenceResult s = mode_equivalence_sweep_serial(0, 8, 10.0);
  const EquivalenceResult p = mode_equivalence_sweep_parallel(0, 8, 10.0);
  CHECK(s.joystick_divergence == p.joystick_divergence);
  CHECK(s.body_divergence == p.body_divergence);
  CHECK(s.joystick_divergence <= 1e-9);
  CHECK(s.body_divergence <= 1e-12);
}

TEST_CASE("parallel analysis matches serial") {
  const auto dir = testsupport::scratch_dir("batch_analysis");
  SessionConfig cfg = testsupport::default_config();
  cfg.trial.n_pairs = 2;
  for (PolicyKind k : {PolicyKind::BodyOnly, PolicyKind::SequentialDual}) simulate_to_dir(cfg, k, 3, 1, dir.string());
  std::vector<LoadedSession> loaded;
  for (const auto& p : expand_event_logs(dir.string())) loaded.push_back(load_session_logs(p));
  REQUIRE(loaded.size() == 6);
  const auto a = analyze_sessions_serial(loaded);
  const auto b = analyze_sessions_parallel(loaded);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].session_id == b[i].session_id);
    REQUIRE(a[i].reaches.size() == b[i].reaches.size());
    for (std::size_t r = 0; r < a[i].reaches.size(); ++r) {
      CHECK(a[i].reaches[r].result.completion_time == b[i].reaches[r].result.completion_time);
      CHECK(a[i].reaches[r].contribution.delta_tf == b[i].reaches[r].contribution.delta_tf);
    }
  }
  CHECK(parallel_threads() >= 1);
}
