// bodylink command line: simulate, serve, analyze, replay.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "bodylink/analysis.hpp"
#include "bodylink/config.hpp"
#include "bodylink/replay.hpp"
#include "bodylink/server.hpp"
#include "bodylink/simulate.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

std::vector<bodylink::PolicyKind> parse_policies(const std::string& s) {
  using bodylink::PolicyKind;
  if (s == "all") return {PolicyKind::JoystickOnly, PolicyKind::BodyOnly, PolicyKind::SequentialDual};
  return {bodylink::policy_kind_from_string(s)};
}

int run_simulate(const std::string& config_path, const std::string& policy, int trials, std::uint64_t seed,
                 std::string out, bool serial) {
  const bodylink::SessionConfig cfg = bodylink::load_session_config(config_path);
  if (out.empty()) out = cfg.log_dir;
  int failures = 0;
  for (const bodylink::PolicyKind kind : parse_policies(policy)) {
    const auto sessions = bodylink::simulate_to_dir(cfg, kind, trials, seed, out, !serial);
    for (const auto& s : sessions) {
      std::cout << s.events_path << (s.completed ? "" : "  ABORTED: " + s.diagnostic) << '\n';
      failures += s.completed ? 0 : 1;
    }
  }
  if (failures > 0) {
    std::cerr << "error: " << failures << " trial(s) hit the target watchdog; logs were still written\n";
    return 3;
  }
  return 0;
}

int run_serve(const std::string& config_path, int port, double duration, std::string out, std::string session_id,
              bool any) {
  const bodylink::SessionConfig cfg = bodylink::load_session_config(config_path);
  if (out.empty()) out = cfg.log_dir;
  if (session_id.empty()) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    session_id = "live-" + cfg.config_hash.substr(0, 8) + "-" +
                 std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now).count());
  }
  bodylink::FileLogSink sink((std::filesystem::path(out) / session_id).string());
  bodylink::Server server(cfg, {session_id, cfg.config_hash, cfg.participant_id, ""}, &sink, {port, any});
  server.start();
  std::cout << "serving session " << session_id << " on port " << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) {
      break;
    }
  }
  server.stop();
  std::cout << "stopped after " << server.ticks() << " ticks" << std::endl;
  return 0;
}

int run_analyze(const std::vector<std::string>& patterns, const std::string& out, bool force, bool serial) {
  std::vector<std::string> paths;
  for (const std::string& p : patterns) {
    const auto found = bodylink::expand_event_logs(p);
    paths.insert(paths.end(), found.begin(), found.end());
  }
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  if (paths.empty()) {
    std::cerr << "error: no *.events.jsonl files match the given --logs pattern(s)\n";
    return 2;
  }
  bodylink::AnalysisOptions options;
  options.force = force;
  options.parallel = !serial;
  const bodylink::AnalysisReport report = bodylink::analyze_logs(paths, options);
  bodylink::write_report(report, out);
  std::size_t reaches = 0;
  for (const auto& s : report.sessions) reaches += s.reaches.size();
  std::cout << "analyzed " << paths.size() << " session(s), " << reaches << " reaches -> " << out << '\n';
  return 0;
}

int run_replay(const std::vector<std::string>& patterns, double speed, int port, int wait_ms) {
  std::vector<std::string> paths;
  for (const std::string& p : patterns) {
    const auto found = bodylink::expand_event_logs(p);
    paths.insert(paths.end(), found.begin(), found.end());
  }
  if (paths.empty()) {
    std::cerr << "error: no *.events.jsonl files match the given --logs pattern(s)\n";
    return 2;
  }
  std::vector<bodylink::ReplayFrame> frames;
  std::string hash;
  for (const std::string& p : paths) {
    auto f = bodylink::replay_frames_from_files(p);
    if (hash.empty()) hash = f.front().frame.value("config_hash", std::string());
    frames.insert(frames.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  if (port > 0) {
    std::cerr << "waiting for a console on port " << port << '\n';
    const std::size_t n = bodylink::replay_to_port(frames, port, speed, hash, wait_ms);
    std::cerr << "sent " << n << " frames\n";
  } else {
    bodylink::replay_paced(frames, speed, [](const bodylink::ReplayFrame& f) { std::cout << f.frame.dump() << '\n'; });
    std::cout.flush();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bodylink: body-link teleoperation workbench"};
  app.require_subcommand(1);

  std::string config = "config/default.json";
  std::string policy = "sequential-dual";
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out;
  bool serial = false;
  auto* sim = app.add_subcommand("simulate", "run scripted-operator trials and write session logs");
  sim->add_option("--config", config, "session config JSON")->check(CLI::ExistingFile);
  sim->add_option("--policy", policy, "body-only | joystick-only | sequential-dual | all");
  sim->add_option("--trials", trials, "trials per policy")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "operator noise seed");
  sim->add_option("--out", out, "output directory (default: log_dir from the config)");
  sim->add_flag("--serial", serial, "run trials one after another instead of in parallel");

  int port = 0;
  double duration = 0.0;
  std::string session_id;
  bool any = false;
  auto* serve = app.add_subcommand("serve", "run a live session and accept console connections");
  serve->add_option("--config", config, "session config JSON")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--duration", duration, "stop after this many seconds (0: until interrupted)");
  serve->add_option("--out", out, "log directory (default: log_dir from the config)");
  serve->add_option("--session", session_id, "session id for the logs");
  serve->add_flag("--listen-any", any, "listen on all interfaces instead of loopback");

  std::vector<std::string> logs;
  bool force = false;
  std::string report_dir = "report";
  auto* analyze = app.add_subcommand("analyze", "compute metrics and statistics from session logs");
  analyze->add_option("--logs", logs, "glob(s) or directories of session logs")->required();
  analyze->add_option("--out", report_dir, "output directory for CSV and JSON");
  analyze->add_flag("--force", force, "analyze logs recorded with different configs together");
  analyze->add_flag("--serial", serial, "analyze sessions one after another");

  double speed = 1.0;
  int wait_ms = 30000;
  auto* replay = app.add_subcommand("replay", "re-emit logged snapshots and events");
  replay->add_option("--logs", logs, "glob(s) of event logs")->required();
  replay->add_option("--speed", speed, "time scale (2 = twice as fast, 0 = no pacing)")->check(CLI::NonNegativeNumber);
  replay->add_option("--port", port, "stream to one console on this port instead of stdout")->check(CLI::Range(0, 65535));
  replay->add_option("--wait-ms", wait_ms, "how long to wait for the console to connect");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(config, policy, trials, seed, out, serial);
    if (*serve) return run_serve(config, port, duration, out, session_id, any);
    if (*analyze) return run_analyze(logs, report_dir, force, serial);
    if (*replay) return run_replay(logs, speed, port, wait_ms);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
