#include "bodylink/simulate.hpp"

#include <filesystem>
#include <stdexcept>

#include "bodylink/logs.hpp"

namespace bodylink {

std::string simulation_session_id(const std::string& config_hash, PolicyKind policy, std::uint64_t seed, int index) {
  return "sim-" + config_hash.substr(0, 8) + "-" + to_string(policy) + "-s" + std::to_string(seed) + "-t" +
         std::to_string(index);
}

std::vector<TrialJob> simulation_jobs(const SessionConfig& cfg, PolicyKind policy, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("--trials must be at least 1");
  std::vector<TrialJob> jobs;
  for (int i = 0; i < trials; ++i) {
    TrialJob job;
    job.policy = cfg.operator_policy;
    job.policy.kind = policy;
    // splitmix-style spread so neighbouring seeds give unrelated tremor.
    job.policy.noise_seed = seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(i);
    job.mode = paired_mode(policy);
    job.session_id = simulation_session_id(cfg.config_hash, policy, seed, i);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

std::vector<SimulatedSession> simulate_to_dir(const SessionConfig& cfg, PolicyKind policy, int trials,
                                              std::uint64_t seed, const std::string& out_dir, bool parallel) {
  const std::vector<TrialJob> jobs = simulation_jobs(cfg, policy, trials, seed);
  const std::vector<TrialRunResult> runs = parallel ? run_trials_parallel(cfg, jobs) : run_trials_serial(cfg, jobs);
  std::filesystem::create_directories(out_dir);
  std::vector<SimulatedSession> out;
  for (const TrialRunResult& r : runs) {
    SimulatedSession s;
    s.session_id = r.session_id;
    const std::string stem = (std::filesystem::path(out_dir) / r.session_id).string();
    s.events_path = stem + ".events.jsonl";
    s.telemetry_path = stem + ".telemetry.jsonl";
    write_lines(s.events_path, r.event_lines);
    write_lines(s.telemetry_path, r.telemetry_lines);
    s.completed = r.completed;
    s.diagnostic = r.diagnostic;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bodylink
