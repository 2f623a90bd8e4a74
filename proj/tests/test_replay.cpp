#include <algorithm>
#include <chrono>
#include <future>
#include <sstream>
#include <thread>

#include "bodylink/analysis.hpp"
#include "bodylink/operator.hpp"
#include "bodylink/replay.hpp"
#include "bodylink/simulate.hpp"
#include "bodylink/wire.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bodylink;

namespace {

TrialRunResult small_run() {
  SessionConfig cfg = testsupport::default_config();
  cfg.trial.n_pairs = 2;
  OperatorPolicy p;
  p.kind = PolicyKind::SequentialDual;
  return run_trial(p, cfg, ControlMode::Dual, "replay-test");
}

std::string joined(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + '\n';
  return s;
}

}  // namespace

TEST_CASE("replay stream: headers, every row and every event, in time order") {
  const TrialRunResult run = small_run();
  const auto frames = replay_frames(run.event_lines, run.telemetry_lines);
  CHECK(frames.size() == run.event_lines.size() + run.telemetry_lines.size());
  REQUIRE(frames.size() > 2);
  CHECK(frames[0].frame.at("type") == "header");
  CHECK(frames[1].frame.at("type") == "header");

  std::size_t snapshots = 0, events = 0;
  for (std::size_t i = 2; i < frames.size(); ++i) {
    const std::string type = frames[i].frame.at("type");
    if (type == "snapshot") ++snapshots;
    if (type == "event") ++events;
    CHECK(frames[i].frame.at("session") == "replay-test");
    if (i > 2) CHECK(frames[i].t >= frames[i - 1].t);
  }
  CHECK(snapshots == run.telemetry_lines.size() - 1);
  CHECK(events == run.event_lines.size() - 1);
}

TEST_CASE("rebuilt logs are byte-identical, so metrics are too") {
  const TrialRunResult run = small_run();
  const RebuiltLogs back = rebuild_logs(replay_frames(run.event_lines, run.telemetry_lines));
  CHECK(back.event_lines == run.event_lines);
  CHECK(back.telemetry_lines == run.telemetry_lines);

  std::istringstream e1(joined(run.event_lines)), t1(joined(run.telemetry_lines));
  std::istringstream e2(joined(back.event_lines)), t2(joined(back.telemetry_lines));
  const auto a = analyze_trial(read_event_log(e1, "a"), read_telemetry_log(t1, "a"));
  const auto b = analyze_trial(read_event_log(e2, "b"), read_telemetry_log(t2, "b"));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].result.completion_time == b[i].result.completion_time);
    CHECK(a[i].contribution.b[0] == b[i].contribution.b[0]);
    CHECK(a[i].tbd.rotation == b[i].tbd.rotation);
  }
}

TEST_CASE("paced replay at 2x keeps the order and roughly halves the duration") {
  const TrialRunResult run = small_run();
  auto frames = replay_frames(run.event_lines, run.telemetry_lines);
  // Keep the first 0.6 s of session time to bound the wall-clock cost.
  frames.erase(std::remove_if(frames.begin(), frames.end(), [](const ReplayFrame& f) { return f.t > 0.6; }),
               frames.end());
  std::vector<std::string> order;
  const auto t0 = std::chrono::steady_clock::now();
  replay_paced(frames, 2.0, [&](const ReplayFrame& f) { order.push_back(f.frame.dump()); });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(order.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(order[i] == frames[i].frame.dump());
  const double span = frames.back().t - frames.front().t;
  CHECK(wall >= span / 2.0 - 0.02);
  CHECK(wall <= span / 2.0 + 0.25);
}

TEST_CASE("replay rejects logs from another schema version") {
  TrialRunResult run = small_run();
  auto header = nlohmann::json::parse(run.event_lines[0]);
  header["schema_version"] = kLogSchemaVersion + 1;
  run.event_lines[0] = header.dump();
  try {
    replay_frames(run.event_lines, run.telemetry_lines);
    FAIL("expected LogFormatError");
  } catch (const LogFormatError& e) {
    CHECK(std::string(e.what()).find("schema version " + std::to_string(kLogSchemaVersion + 1)) != std::string::npos);
  }
}

TEST_CASE("replay streams to a console over the wire protocol") {
  const TrialRunResult run = small_run();
  const auto frames = replay_frames(run.event_lines, run.telemetry_lines);
  std::promise<int> port;
  auto port_ready = port.get_future();
  std::size_t sent = 0;
  std::thread server([&] {
    sent = replay_to_port(frames, 0, 0.0, "hash123", 5000, [&](int p) { port.set_value(p); });
  });
  WireClient c("127.0.0.1", port_ready.get());
  const nlohmann::json hello = c.handshake("replay-test");
  CHECK(hello.at("config_hash") == "hash123");
  CHECK(hello.value("replay", false));
  std::vector<nlohmann::json> got;
  while (true) {
    const auto f = c.receive(2000);
    REQUIRE(f.has_value());
    if (f->at("type") == "replay_end") {
      CHECK(f->at("frames") == frames.size());
      break;
    }
    got.push_back(*f);
  }
  server.join();
  CHECK(sent == frames.size());
  REQUIRE(got.size() == frames.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == frames[i].frame);
}

TEST_CASE("replay from files") {
  const auto dir = testsupport::scratch_dir("replay_files");
  SessionConfig cfg = testsupport::default_config();
  cfg.trial.n_pairs = 1;
  const auto sims = simulate_to_dir(cfg, PolicyKind::JoystickOnly, 1, 0, dir.string(), false);
  REQUIRE(sims.size() == 1);
  const auto frames = replay_frames_from_files(sims[0].events_path);
  const EventLog ev = load_event_log(sims[0].events_path);
  const TelemetryLog tl = load_telemetry_log(sims[0].telemetry_path);
  CHECK(frames.size() == ev.events.size() + tl.rows.size() + 2);
}
