#include "bodylink/analysis.hpp"

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bodylink/link_control.hpp"

namespace bodylink {

namespace fs = std::filesystem;

namespace {

const std::array<const char*, 3> kAxisNames = {"x", "y", "z"};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int mode_rank(const std::string& mode) {
  if (mode == "joystick") return 0;
  if (mode == "body") return 1;
  if (mode == "dual") return 2;
  return 3;
}

/// Values of `metric` for every reach of `mode`, NaN-free.
std::vector<double> metric_values(const std::vector<AnalyzedSession>& sessions, const std::string& mode,
                                  const std::string& metric) {
  std::vector<double> out;
  for (const AnalyzedSession& s : sessions) {
    for (const ReachMetrics& r : s.reaches) {
      if (r.result.mode != mode) continue;
      double v = std::numeric_limits<double>::quiet_NaN();
      if (metric == "completion_time") {
        v = r.result.completion_time;
      } else if (metric.rfind("tbd_", 0) == 0) {
        static const std::vector<std::string> names = {"tbd_x", "tbd_y", "tbd_z", "tbd_alpha", "tbd_beta", "tbd_gamma"};
        const auto idx = static_cast<std::size_t>(std::find(names.begin(), names.end(), metric) - names.begin());
        v = idx < 3 ? r.tbd.translation[idx] : r.tbd.rotation[idx - 3];
      } else if (metric.rfind("b_tf_", 0) == 0) {
        const int axis = metric.back() - 'x';
        if (r.contribution.valid[axis]) v = r.contribution.b[axis].back();
      }
      if (!std::isnan(v)) out.push_back(v);
    }
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw AnalysisError("cannot write " + path.string());
  }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return csv_escape(s); }
  static std::string cell(const char* s) { return csv_escape(s); }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  std::ofstream out_;
};

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json stats_json(const SummaryStats& s) {
  return {{"n", s.n},           {"median", s.median},
          {"q25", s.q25},       {"q75", s.q75},
          {"mean", s.mean},     {"stddev", s.stddev},
          {"whisker_low", s.whisker_low}, {"whisker_high", s.whisker_high},
          {"single_value", s.single_value}};
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> expand_event_logs(const std::string& pattern) {
  std::string pat = pattern;
  if (fs::is_directory(pat)) pat = (fs::path(pat) / "*.events.jsonl").string();
  glob_t g{};
  const int rc = ::glob(pat.c_str(), 0, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) {
      const std::string p = g.gl_pathv[i];
      if (ends_with(p, ".events.jsonl")) out.push_back(p);
    }
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw AnalysisError("cannot expand log pattern " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

LoadedSession load_session_logs(const std::string& events_path) {
  LoadedSession s;
  s.events = load_event_log(events_path);
  s.telemetry = load_telemetry_log(telemetry_path_for(events_path));
  if (s.events.header.session_id != s.telemetry.header.session_id ||
      s.events.header.config_hash != s.telemetry.header.config_hash) {
    throw AnalysisError(events_path + ": telemetry file belongs to a different session (" +
                        s.telemetry.header.session_id + ")");
  }
  return s;
}

namespace {

AnalyzedSession analyze_one(const LoadedSession& s) {
  AnalyzedSession a;
  a.session_id = s.events.header.session_id;
  a.config_hash = s.events.header.config_hash;
  a.policy = s.events.header.policy;
  a.reaches = analyze_trial(s.events, s.telemetry);
  return a;
}

}  // namespace

std::vector<AnalyzedSession> analyze_sessions_serial(const std::vector<LoadedSession>& sessions) {
  std::vector<AnalyzedSession> out;
  out.reserve(sessions.size());
  for (const LoadedSession& s : sessions) out.push_back(analyze_one(s));
  return out;
}

std::vector<AnalyzedSession> analyze_sessions_parallel(const std::vector<LoadedSession>& sessions) {
  const auto n = static_cast<std::int64_t>(sessions.size());
  std::vector<AnalyzedSession> out(sessions.size());
  std::vector<std::string> errors(sessions.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = analyze_one(sessions[k]);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw LogFormatError(e);
  }
  return out;
}

const std::vector<std::string>& analysis_metrics() {
  static const std::vector<std::string> names = {"completion_time", "tbd_x",  "tbd_y",  "tbd_z",  "tbd_alpha",
                                                 "tbd_beta",        "tbd_gamma", "b_tf_x", "b_tf_y", "b_tf_z"};
  return names;
}

AnalysisReport analyze_loaded(std::vector<std::string> inputs, const std::vector<LoadedSession>& sessions,
                              const AnalysisOptions& options) {
  AnalysisReport report;
  report.inputs = std::move(inputs);
  std::set<std::string> hashes;
  for (const LoadedSession& s : sessions) hashes.insert(s.events.header.config_hash);
  report.config_hashes.assign(hashes.begin(), hashes.end());
  if (hashes.size() > 1 && !options.force) {
    std::string list;
    for (const std::string& h : hashes) list += (list.empty() ? "" : ", ") + h.substr(0, 12);
    throw AnalysisError("logs come from " + std::to_string(hashes.size()) + " different configs (" + list +
                        "); pass --force to analyze them together");
  }

  report.sessions = options.parallel ? analyze_sessions_parallel(sessions) : analyze_sessions_serial(sessions);

  std::set<std::string> modes;
  for (const AnalyzedSession& s : report.sessions) {
    for (const ReachMetrics& r : s.reaches) modes.insert(r.result.mode);
  }
  report.modes.assign(modes.begin(), modes.end());
  std::stable_sort(report.modes.begin(), report.modes.end(),
                   [](const std::string& a, const std::string& b) { return mode_rank(a) < mode_rank(b); });

  for (const std::string& mode : report.modes) {
    for (const std::string& metric : analysis_metrics()) {
      const std::vector<double> v = metric_values(report.sessions, mode, metric);
      if (v.empty()) continue;
      report.summaries.push_back({mode, metric, summarize(v)});
    }
  }

  const int m = options.bonferroni_m > 0 ? options.bonferroni_m
                                         : std::max(1, static_cast<int>(report.modes.size()) - 1);
  for (const std::string& metric : analysis_metrics()) {
    for (std::size_t a = 0; a < report.modes.size(); ++a) {
      for (std::size_t b = a + 1; b < report.modes.size(); ++b) {
        const std::vector<double> va = metric_values(report.sessions, report.modes[a], metric);
        const std::vector<double> vb = metric_values(report.sessions, report.modes[b], metric);
        if (va.empty() || vb.empty()) continue;
        PairwiseTest t;
        t.metric = metric;
        t.mode_a = report.modes[a];
        t.mode_b = report.modes[b];
        t.n_a = va.size();
        t.n_b = vb.size();
        t.result = mann_whitney_u(va, vb);
        t.bonferroni_m = m;
        t.p_corrected = bonferroni(t.result.p, m);
        report.tests.push_back(t);
      }
    }
  }

  for (const std::string& mode : report.modes) {
    std::vector<ContributionSeries> series;
    for (const AnalyzedSession& s : report.sessions) {
      for (const ReachMetrics& r : s.reaches) {
        if (r.result.mode == mode) series.push_back(r.contribution);
      }
    }
    ModeCurves c;
    c.mode = mode;
    for (int axis = 0; axis < 3; ++axis) {
      c.axes[axis] = median_contribution_curve(series, axis, options.curve_points);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      c.b_half[axis] = c.axes[axis].reaches ? time_to_fraction(c.axes[axis].tau, c.axes[axis].b, 0.5) : nan;
      c.j_half[axis] = c.axes[axis].reaches ? time_to_fraction(c.axes[axis].tau, c.axes[axis].j, 0.5) : nan;
    }
    report.curves.push_back(std::move(c));
  }
  return report;
}

AnalysisReport analyze_logs(const std::vector<std::string>& event_paths, const AnalysisOptions& options) {
  if (event_paths.empty()) throw AnalysisError("no event logs to analyze");
  std::vector<LoadedSession> sessions;
  sessions.reserve(event_paths.size());
  for (const std::string& p : event_paths) sessions.push_back(load_session_logs(p));
  return analyze_loaded(event_paths, sessions, options);
}

void write_report(const AnalysisReport& report, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  {
    CsvWriter w(dir / "targets.csv");
    w.row("session", "participant", "mode", "trial", "target_index", "t_shown", "t_validated", "completion_time",
          "tbd_x", "tbd_y", "tbd_z", "tbd_alpha", "tbd_beta", "tbd_gamma");
    for (const AnalyzedSession& s : report.sessions) {
      for (const ReachMetrics& r : s.reaches) {
        const TargetResult& t = r.result;
        w.row(s.session_id, t.participant_id, t.mode, t.trial, t.target_index, t.t_shown, t.t_validated,
              t.completion_time, r.tbd.translation[0], r.tbd.translation[1], r.tbd.translation[2], r.tbd.rotation[0],
              r.tbd.rotation[1], r.tbd.rotation[2]);
      }
    }
  }
  {
    CsvWriter w(dir / "contributions.csv");
    w.row("session", "mode", "trial", "target_index", "axis", "valid", "delta_tf", "joystick_tf", "b_tf", "j_tf");
    for (const AnalyzedSession& s : report.sessions) {
      for (const ReachMetrics& r : s.reaches) {
        const ContributionSeries& c = r.contribution;
        for (int a = 0; a < 3; ++a) {
          w.row(s.session_id, r.result.mode, r.result.trial, r.result.target_index, kAxisNames[a], c.valid[a],
                c.delta_tf[a], c.joystick_tf[a], c.b[a].back(), c.j[a].back());
        }
      }
    }
  }
  {
    CsvWriter w(dir / "contribution_curves.csv");
    w.row("mode", "axis", "tau", "b_median", "j_median", "reaches");
    for (const ModeCurves& c : report.curves) {
      for (int a = 0; a < 3; ++a) {
        const MedianCurve& m = c.axes[a];
        for (std::size_t g = 0; g < m.b.size(); ++g) w.row(c.mode, kAxisNames[a], m.tau[g], m.b[g], m.j[g], m.reaches);
      }
    }
  }
  {
    CsvWriter w(dir / "summary.csv");
    w.row("mode", "metric", "n", "median", "q25", "q75", "mean", "stddev", "whisker_low", "whisker_high",
          "single_value");
    for (const MetricSummary& m : report.summaries) {
      const SummaryStats& s = m.stats;
      w.row(m.mode, m.metric, s.n, s.median, s.q25, s.q75, s.mean, s.stddev, s.whisker_low, s.whisker_high,
            s.single_value);
    }
  }
  {
    CsvWriter w(dir / "tests.csv");
    w.row("metric", "mode_a", "mode_b", "n_a", "n_b", "u", "p", "method", "bonferroni_m", "p_corrected");
    for (const PairwiseTest& t : report.tests) {
      w.row(t.metric, t.mode_a, t.mode_b, t.n_a, t.n_b, t.result.u, t.result.p, to_string(t.result.method),
            t.bonferroni_m, t.p_corrected);
    }
  }

  nlohmann::json j;
  j["inputs"] = report.inputs;
  j["config_hashes"] = report.config_hashes;
  j["modes"] = report.modes;
  nlohmann::json sessions = nlohmann::json::array();
  for (const AnalyzedSession& s : report.sessions) {
    sessions.push_back({{"session", s.session_id},
                        {"config_hash", s.config_hash},
                        {"policy", s.policy},
                        {"targets", s.reaches.size()}});
  }
  j["sessions"] = sessions;
  nlohmann::json summary = nlohmann::json::array();
  for (const MetricSummary& m : report.summaries) {
    nlohmann::json e = stats_json(m.stats);
    e["mode"] = m.mode;
    e["metric"] = m.metric;
    summary.push_back(e);
  }
  j["summary"] = summary;
  nlohmann::json tests = nlohmann::json::array();
  for (const PairwiseTest& t : report.tests) {
    tests.push_back({{"metric", t.metric},
                     {"mode_a", t.mode_a},
                     {"mode_b", t.mode_b},
                     {"n_a", t.n_a},
                     {"n_b", t.n_b},
                     {"u", t.result.u},
                     {"p", t.result.p},
                     {"method", to_string(t.result.method)},
                     {"bonferroni_m", t.bonferroni_m},
                     {"p_corrected", t.p_corrected}});
  }
  j["tests"] = tests;
  nlohmann::json curves = nlohmann::json::array();
  for (const ModeCurves& c : report.curves) {
    nlohmann::json axes = nlohmann::json::object();
    for (int a = 0; a < 3; ++a) {
      const MedianCurve& m = c.axes[a];
      axes[kAxisNames[a]] = {{"reaches", m.reaches},
                             {"tau", m.tau},
                             {"b", m.b},
                             {"j", m.j},
                             {"b_half", number_or_null(c.b_half[a])},
                             {"j_half", number_or_null(c.j_half[a])}};
    }
    curves.push_back({{"mode", c.mode}, {"axes", axes}});
  }
  j["curves"] = curves;

  std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
  if (!out) throw AnalysisError("cannot write " + (dir / "report.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace bodylink
