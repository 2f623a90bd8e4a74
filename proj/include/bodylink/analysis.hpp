#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bodylink/logs.hpp"
#include "bodylink/metrics.hpp"
#include "bodylink/stats.hpp"

namespace bodylink {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expands a glob (or a directory) into the sorted list of *.events.jsonl
/// files it names. Telemetry files matched by the same glob are skipped;
/// they are paired by name later.
std::vector<std::string> expand_event_logs(const std::string& pattern);

struct LoadedSession {
  EventLog events;
  TelemetryLog telemetry;
};

/// Loads an event log and its sibling telemetry file and checks that both
/// belong to the same session.
LoadedSession load_session_logs(const std::string& events_path);

struct AnalyzedSession {
  std::string session_id;
  std::string config_hash;
  std::string policy;
  std::vector<ReachMetrics> reaches;
};

/// Per-session analysis, serial reference and OpenMP version. Results are
/// in input order and identical between the two.
std::vector<AnalyzedSession> analyze_sessions_serial(const std::vector<LoadedSession>& sessions);
std::vector<AnalyzedSession> analyze_sessions_parallel(const std::vector<LoadedSession>& sessions);

struct MetricSummary {
  std::string mode;
  std::string metric;
  SummaryStats stats;
};

struct PairwiseTest {
  std::string metric;
  std::string mode_a;
  std::string mode_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  MannWhitneyResult result;
  int bonferroni_m = 1;
  double p_corrected = 1.0;
};

struct ModeCurves {
  std::string mode;
  std::array<MedianCurve, 3> axes;
  std::array<double, 3> b_half{};  // τ at which median b reaches half its final value
  std::array<double, 3> j_half{};
};

struct AnalysisOptions {
  bool force = false;  // accept logs with differing config hashes
  bool parallel = true;
  int curve_points = 101;
  int bonferroni_m = 0;  // 0: number of modes present minus one (at least 1)
};

struct AnalysisReport {
  std::vector<std::string> inputs;
  std::vector<std::string> config_hashes;
  std::vector<AnalyzedSession> sessions;
  std::vector<std::string> modes;  // present modes in joystick, body, dual order
  std::vector<MetricSummary> summaries;
  std::vector<PairwiseTest> tests;
  std::vector<ModeCurves> curves;
};

/// Metric names used in the summary and test tables.
const std::vector<std::string>& analysis_metrics();

AnalysisReport analyze_logs(const std::vector<std::string>& event_paths, const AnalysisOptions& options = {});
AnalysisReport analyze_loaded(std::vector<std::string> inputs, const std::vector<LoadedSession>& sessions,
                              const AnalysisOptions& options = {});

/// targets.csv, contributions.csv, contribution_curves.csv, summary.csv,
/// tests.csv and report.json in out_dir.
void write_report(const AnalysisReport& report, const std::string& out_dir);

/// Shortest round-trip decimal form, used for every number in the CSVs.
std::string format_number(double v);

}  // namespace bodylink
