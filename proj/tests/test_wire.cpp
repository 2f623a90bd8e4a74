#include <algorithm>
#include <chrono>
#include <thread>

#include "bodylink/server.hpp"
#include "bodylink/wire.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bodylink;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

/// Receives until `pred` matches a frame or the timeout expires.
template <class Pred>
std::optional<nlohmann::json> wait_for(WireClient& c, Pred pred, int timeout_ms = 2000) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  while (Clock::now() < deadline) {
    const int left = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count());
    auto f = c.receive(std::max(1, left));
    if (f && pred(*f)) return f;
  }
  return std::nullopt;
}

bool is_type(const nlohmann::json& f, const char* type) { return f.value("type", std::string()) == type; }

struct LiveServer {
  explicit LiveServer(SessionConfig cfg = testsupport::default_config())
      : server(cfg, {"live-test", cfg.config_hash, "tester", ""}, &sink) {
    server.start();
  }
  ~LiveServer() { server.stop(); }
  MemoryLogSink sink;
  Server server;
};

}  // namespace

TEST_CASE("frame encoding and incremental decoding") {
  const nlohmann::json msg = {{"type", "heartbeat"}, {"seq", 3}, {"t", 0.5}};
  const std::string bytes = encode_frame(msg);
  REQUIRE(bytes.size() == 4 + msg.dump().size());
  CHECK(static_cast<unsigned char>(bytes[0]) == 0);
  CHECK(static_cast<unsigned char>(bytes[3]) == msg.dump().size());

  FrameDecoder d;
  const std::string two = bytes + encode_frame({{"type", "start_trial"}});
  for (char ch : two) d.feed(&ch, 1);  // byte by byte
  CHECK(d.next() == msg);
  CHECK(d.next()->at("type") == "start_trial");
  CHECK_FALSE(d.next().has_value());

  FrameDecoder big;
  const char huge[4] = {0x7f, 0, 0, 0};
  big.feed(huge, 4);
  CHECK_THROWS_AS(big.next(), WireError);

  FrameDecoder junk;
  const std::string bad = std::string("\0\0\0\3abc", 7);
  junk.feed(bad.data(), bad.size());
  CHECK_THROWS_AS(junk.next(), WireError);
}

TEST_CASE("inbound message validation") {
  CHECK(std::holds_alternative<StartTrialMsg>(parse_inbound({{"type", "start_trial"}})));
  const auto pose = parse_inbound(
      {{"type", "body_pose"}, {"t", 1.0}, {"translation", {1, 2, 3}}, {"quaternion", {1, 0, 0, 0}}});
  REQUIRE(std::holds_alternative<BodyPoseMsg>(pose));
  CHECK(std::get<BodyPoseMsg>(pose).translation == Vec3(1, 2, 3));
  CHECK(to_json(pose).dump() == to_json(parse_inbound(to_json(pose))).dump());

  CHECK_THROWS_AS(parse_inbound({{"type", "body_pose"}, {"t", 1.0}, {"translation", {1, 2, 3}}, {"quaternion", {2, 0, 0, 0}}}),
                  WireError);
  CHECK_THROWS_AS(parse_inbound({{"type", "joystick"}, {"t", 1.0}, {"deflection", {1.5, 0, 0}}}), WireError);
  CHECK_THROWS_AS(parse_inbound({{"type", "joystick"}, {"t", 1.0}, {"deflection", {0, 0}}}), WireError);
  CHECK_THROWS_AS(parse_inbound({{"type", "set_mode"}, {"mode", "hybrid"}}), WireError);
  CHECK_THROWS_AS(parse_inbound({{"type", "teleport"}}), WireError);
  CHECK_THROWS_AS(parse_inbound(nlohmann::json::array()), WireError);
  CHECK_THROWS_AS(parse_inbound({{"type", "heartbeat"}, {"seq", 1}, {"t", "soon"}}), WireError);

  FrameRegistry reg;
  reg.world_from_optical = Transform::from_translation({0, 0, 1});
  BodyPoseMsg m;
  m.translation = Vec3(1, 0, 0);
  m.quaternion = {std::cos(M_PI / 4), 0, 0, std::sin(M_PI / 4)};
  const Transform w = body_pose_world(reg, m);
  CHECK((w.translation - Vec3(1, 0, 1)).norm() <= 1e-15);
  CHECK(max_abs_diff(w, Transform{Rotation::rz(M_PI / 2), Vec3(1, 0, 1)}) <= 1e-12);
}

TEST_CASE("handshake, heartbeat round trip and protocol errors") {
  LiveServer live;
  WireClient c("127.0.0.1", live.server.port());
  const nlohmann::json hello = c.handshake("test");
  CHECK(hello.at("version") == kWireProtocolVersion);
  CHECK(hello.at("config_hash") == testsupport::default_config().config_hash);
  CHECK(hello.at("session") == "live-test");

  std::vector<double> rtt;
  for (int i = 0; i < 20; ++i) {
    const auto t0 = Clock::now();
    c.send(HeartbeatMsg{i, 0.1 * i});
    const auto ack = wait_for(c, [&](const nlohmann::json& f) { return is_type(f, "heartbeat_ack") && f.at("seq") == i; });
    REQUIRE(ack.has_value());
    rtt.push_back(ms_since(t0));
    CHECK(ack->contains("session_t"));
  }
  std::sort(rtt.begin(), rtt.end());
  MESSAGE("heartbeat RTT median " << rtt[rtt.size() / 2] << " ms, max " << rtt.back() << " ms");
  CHECK(rtt[rtt.size() / 2] < 50.0);

  c.send({{"type", "joystick"}, {"t", 1.0}, {"deflection", {3, 0, 0}}});
  const auto err = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "error"); });
  REQUIRE(err.has_value());
  CHECK(err->at("message").get<std::string>().find("[-1, 1]") != std::string::npos);

  c.send(JoystickMsg{2.0, Vec3::Zero()});
  c.send(JoystickMsg{1.0, Vec3::Zero()});
  const auto mono = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "error"); });
  REQUIRE(mono.has_value());
  CHECK(mono->at("message").get<std::string>().find("increase") != std::string::npos);
}

TEST_CASE("messages before hello are refused") {
  LiveServer live;
  WireClient c("127.0.0.1", live.server.port());
  const auto hello = c.receive(2000);
  REQUIRE(hello.has_value());
  c.send(StartTrialMsg{});
  const auto err = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "error"); });
  REQUIRE(err.has_value());
  CHECK(err->at("message").get<std::string>().find("hello") != std::string::npos);
}

TEST_CASE("joystick deflection shows up in the streamed desired pose") {
  LiveServer live;
  WireClient c("127.0.0.1", live.server.port());
  c.handshake();
  c.send(SetModeMsg{ControlMode::Joystick});
  REQUIRE(wait_for(c, [](const nlohmann::json& f) { return is_type(f, "snapshot") && f.at("mode") == "joystick"; }));

  std::vector<double> latency;
  double t = 1.0;
  for (int round = 0; round < 6; ++round) {
    // Baseline: latest snapshot with the stick released.
    c.send(JoystickMsg{t += 0.01, Vec3::Zero()});
    std::this_thread::sleep_for(std::chrono::milliseconds(80));
    std::optional<nlohmann::json> base;
    while (auto f = c.receive(1)) {
      if (is_type(*f, "snapshot")) base = f;
    }
    if (!base) base = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "snapshot"); });
    REQUIRE(base.has_value());
    const Vec3 x0 = transform_from_json(base->at("desired")).translation;

    const auto t0 = Clock::now();
    c.send(JoystickMsg{t += 0.01, Vec3(round % 2 ? -1.0 : 1.0, 0, 0)});
    const auto moved = wait_for(c, [&](const nlohmann::json& f) {
      return is_type(f, "snapshot") && (transform_from_json(f.at("desired")).translation - x0).norm() > 1e-6;
    });
    REQUIRE(moved.has_value());
    latency.push_back(ms_since(t0));
  }
  c.send(JoystickMsg{t + 0.01, Vec3::Zero()});
  std::sort(latency.begin(), latency.end());
  MESSAGE("joystick-to-snapshot latency median " << latency[latency.size() / 2] << " ms, max " << latency.back()
                                                  << " ms");
  CHECK(latency[latency.size() / 2] <= 43.0);
  CHECK(latency.back() <= 2 * 1000.0 / 30.0);
}

TEST_CASE("start_trial, mode lock and disconnect abort") {
  SessionConfig cfg = testsupport::default_config();
  cfg.trial.n_pairs = 1;
  auto live = std::make_unique<LiveServer>(cfg);
  {
    WireClient c("127.0.0.1", live->server.port());
    c.handshake();
    c.send(StartTrialMsg{});
    const auto shown = wait_for(c, [](const nlohmann::json& f) {
      return is_type(f, "event") && f.at("kind") == "TargetShown";
    });
    REQUIRE(shown.has_value());
    CHECK(shown->at("target_index") == 0);
    CHECK(shown->at("session") == "live-test");
    const auto running = wait_for(c, [](const nlohmann::json& f) {
      return is_type(f, "snapshot") && f.at("status") == "running";
    });
    REQUIRE(running.has_value());
    CHECK(running->at("config_hash") == cfg.config_hash);
    CHECK_FALSE(running->at("target").is_null());

    c.send(SetModeMsg{ControlMode::Body});
    const auto refused = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "error"); });
    REQUIRE(refused.has_value());
    CHECK(refused->at("message").get<std::string>().find("between trials") != std::string::npos);
    c.send(StartTrialMsg{});
    CHECK(wait_for(c, [](const nlohmann::json& f) { return is_type(f, "error"); }).has_value());

    // No body stream in dual mode: the stale flag goes up.
    CHECK(wait_for(c, [](const nlohmann::json& f) {
      return is_type(f, "snapshot") && f.at("flags").at("body_stale") == true;
    }));
  }
  // Client gone mid-trial: the trial is aborted.
  const auto deadline = Clock::now() + std::chrono::seconds(3);
  while (Clock::now() < deadline && live->server.client_count() > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  live->server.stop();
  const auto& events = live->sink.events;
  REQUIRE_FALSE(events.empty());
  CHECK(events.back().find("TrialAborted") != std::string::npos);
  CHECK(events.back().find("input stream closed") != std::string::npos);
}

TEST_CASE("body poses drive the body-mode desired pose") {
  SessionConfig cfg = testsupport::default_config();
  cfg.mode.mode = ControlMode::Body;
  LiveServer live(cfg);
  WireClient c("127.0.0.1", live.server.port());
  c.handshake();
  const Transform b = cfg.initial_body_optical;
  const Eigen::Quaterniond q(b.rotation.matrix());
  double t = 0.0;
  auto pose = [&](const Vec3& shift) {
    BodyPoseMsg m;
    m.t = (t += 0.01);
    m.translation = b.translation + shift;
    m.quaternion = {q.w(), q.x(), q.y(), q.z()};
    c.send(m);
  };
  for (int i = 0; i < 10; ++i) {
    pose(Vec3::Zero());
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const auto before = wait_for(c, [](const nlohmann::json& f) { return is_type(f, "snapshot"); });
  REQUIRE(before.has_value());
  const Vec3 x0 = transform_from_json(before->at("desired")).translation;
  pose(Vec3(0, 0.05, 0));
  const Vec3 world_shift = to_world(cfg.registry, Frame::Optical, Transform::from_translation({0, 0.05, 0})).translation -
                           to_world(cfg.registry, Frame::Optical, Transform::identity()).translation;
  const auto after = wait_for(c, [&](const nlohmann::json& f) {
    return is_type(f, "snapshot") && (transform_from_json(f.at("desired")).translation - x0).norm() > 1e-3;
  });
  REQUIRE(after.has_value());
  const Vec3 moved = transform_from_json(after->at("desired")).translation - x0;
  CHECK((moved - world_shift).norm() <= 1e-9);
}

TEST_CASE("stopping the server closes clients and aborts a running trial") {
  SessionConfig cfg = testsupport::default_config();
  auto live = std::make_unique<LiveServer>(cfg);
  WireClient c("127.0.0.1", live->server.port());
  c.handshake();
  c.send(StartTrialMsg{});
  REQUIRE(wait_for(c, [](const nlohmann::json& f) { return is_type(f, "event"); }));
  live->server.stop();
  CHECK_FALSE(live->server.running());
  CHECK(live->sink.events.back().find("server stopped") != std::string::npos);
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 1000; ++i) c.receive(50);
      }(),
      WireError);
}
