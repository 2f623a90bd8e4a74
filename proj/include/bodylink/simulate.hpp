#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodylink/batch.hpp"
#include "bodylink/config.hpp"
#include "bodylink/operator.hpp"

namespace bodylink {

/// "sim-<first 8 hex of the config hash>-<policy>-s<seed>-t<index>".
std::string simulation_session_id(const std::string& config_hash, PolicyKind policy, std::uint64_t seed, int index);

/// Jobs for `trials` runs of one policy. Each run gets its own tremor seed
/// derived from (seed, index); the policy limits come from the config.
std::vector<TrialJob> simulation_jobs(const SessionConfig& cfg, PolicyKind policy, int trials, std::uint64_t seed);

struct SimulatedSession {
  std::string session_id;
  std::string events_path;
  std::string telemetry_path;
  bool completed = false;
  std::string diagnostic;
};

/// Runs the jobs and writes <out_dir>/<session id>.{events,telemetry}.jsonl.
std::vector<SimulatedSession> simulate_to_dir(const SessionConfig& cfg, PolicyKind policy, int trials,
                                              std::uint64_t seed, const std::string& out_dir, bool parallel = true);

}  // namespace bodylink
