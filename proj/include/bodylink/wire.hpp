#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "json.hpp"
#include "bodylink/link_control.hpp"
#include "bodylink/se3.hpp"

namespace bodylink {

/// Frames are a 4-byte big-endian payload length followed by one UTF-8 JSON
/// document. The server opens with {"type":"hello","version",...}; the
/// client must answer with its own hello before sending anything else.
inline constexpr int kWireProtocolVersion = 1;
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 20;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_frame(const nlohmann::json& j);

/// Incremental decoder for a byte stream.
class FrameDecoder {
 public:
  void feed(const char* data, std::size_t n);
  /// Next complete frame, if any. Throws WireError on oversized frames or
  /// payloads that are not JSON.
  std::optional<nlohmann::json> next();

 private:
  std::string buffer_;
};

struct HelloMsg {
  int version = kWireProtocolVersion;
  std::string config_hash;
  std::string client;
};
/// Pose of the tracked body in the optical (tracker) frame.
struct BodyPoseMsg {
  double t = 0.0;
  Vec3 translation = Vec3::Zero();
  std::array<double, 4> quaternion{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
};
struct JoystickMsg {
  double t = 0.0;
  Vec3 deflection = Vec3::Zero();  // each component in [−1, 1]
};
struct SetModeMsg {
  ControlMode mode = ControlMode::Dual;
};
struct StartTrialMsg {};
struct HeartbeatMsg {
  std::int64_t seq = 0;
  double t = 0.0;
};

using InboundMessage = std::variant<HelloMsg, BodyPoseMsg, JoystickMsg, SetModeMsg, StartTrialMsg, HeartbeatMsg>;

/// Validates the message shape and ranges; throws WireError with the
/// offending field on bad input.
InboundMessage parse_inbound(const nlohmann::json& j);
nlohmann::json to_json(const InboundMessage& m);

/// Body pose as a world-frame transform through the registry.
Transform body_pose_world(const FrameRegistry& reg, const BodyPoseMsg& m);

// Blocking socket helpers (POSIX).

/// Listening TCP socket on 127.0.0.1 (or any address when `any`); port 0
/// picks an ephemeral port.
int listen_tcp(int port, bool any = false);
int bound_port(int fd);
int connect_tcp(const std::string& host, int port);
void send_all(int fd, const std::string& bytes);

/// Minimal blocking client used by tests, the replay tool and scripts.
class WireClient {
 public:
  WireClient(const std::string& host, int port);
  ~WireClient();
  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  /// Reads the server hello and answers with ours. Returns the server hello.
  nlohmann::json handshake(const std::string& client_name = "bodylink-client");
  void send(const nlohmann::json& j);
  void send(const InboundMessage& m) { send(to_json(m)); }
  /// Next frame within timeout_ms, or nullopt on timeout. Throws WireError
  /// when the server closes the connection.
  std::optional<nlohmann::json> receive(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

}  // namespace bodylink
