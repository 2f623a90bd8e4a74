// Serial reference vs OpenMP kernels for the three batch workloads.
// Usage: bench_batch [config.json] [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include "bodylink/analysis.hpp"
#include "bodylink/batch.hpp"
#include "bodylink/config.hpp"
#include "bodylink/simulate.hpp"

using namespace bodylink;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-25s serial %8.3f s   parallel %8.3f s   speedup %5.2fx\n", name, serial, parallel,
              parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_path = argc > 1 ? argv[1] : std::string(BODYLINK_SOURCE_DIR) + "/config/default.json";
  const int repeats = argc > 2 ? std::max(1, std::atoi(argv[2])) : 3;
  const SessionConfig cfg = load_session_config(config_path);
  std::printf("threads: %d, repeats: %d\n", parallel_threads(), repeats);

  std::vector<TrialJob> jobs;
  for (PolicyKind k : {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual}) {
    const auto some = simulation_jobs(cfg, k, 4, 1);
    jobs.insert(jobs.end(), some.begin(), some.end());
  }
  report("trials (12 x 30)", best_of(repeats, [&] { run_trials_serial(cfg, jobs); }),
         best_of(repeats, [&] { run_trials_parallel(cfg, jobs); }));

  report("equivalence (100 x 60 s)", best_of(repeats, [] { mode_equivalence_sweep_serial(0, 100); }),
         best_of(repeats, [] { mode_equivalence_sweep_parallel(0, 100); }));

  const auto dir = std::filesystem::temp_directory_path() / "bodylink_bench";
  std::filesystem::remove_all(dir);
  for (PolicyKind k : {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual}) {
    simulate_to_dir(cfg, k, 4, 1, dir.string());
  }
  std::vector<LoadedSession> loaded;
  for (const auto& p : expand_event_logs(dir.string())) loaded.push_back(load_session_logs(p));
  report("analysis (12 sessions)", best_of(repeats, [&] { analyze_sessions_serial(loaded); }),
         best_of(repeats, [&] { analyze_sessions_parallel(loaded); }));
  std::filesystem::remove_all(dir);
  return 0;
}
