#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodylink/config.hpp"
#include "bodylink/operator.hpp"

namespace bodylink {

struct TrialJob {
  OperatorPolicy policy;
  ControlMode mode = ControlMode::Dual;
  std::string session_id;
};

/// Independent closed-loop trials. The parallel version distributes jobs
/// over OpenMP threads; results are in job order and byte-identical to the
/// serial reference.
std::vector<TrialRunResult> run_trials_serial(const SessionConfig& cfg, const std::vector<TrialJob>& jobs);
std::vector<TrialRunResult> run_trials_parallel(const SessionConfig& cfg, const std::vector<TrialJob>& jobs);

/// One randomized dual-mode equivalence case: a random initial body and
/// effector pose, `duration` seconds of ticks at `dt`.
///  - frozen body, random piecewise-constant joystick: dual vs joystick law
///  - zero joystick, random body motion: dual vs body law
/// Divergences are the largest per-entry difference of the desired poses.
struct EquivalenceResult {
  double joystick_divergence = 0.0;
  double body_divergence = 0.0;
};

EquivalenceResult mode_equivalence_case(std::uint64_t seed, double duration = 60.0, double dt = 0.01);

/// Worst case over seeds first_seed .. first_seed + cases − 1.
EquivalenceResult mode_equivalence_sweep_serial(std::uint64_t first_seed, int cases, double duration = 60.0,
                                                double dt = 0.01);
EquivalenceResult mode_equivalence_sweep_parallel(std::uint64_t first_seed, int cases, double duration = 60.0,
                                                  double dt = 0.01);

/// Number of threads the parallel kernels will use (1 without OpenMP).
int parallel_threads();

}  // namespace bodylink
