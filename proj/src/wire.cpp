#include "bodylink/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

namespace bodylink {

std::string encode_frame(const nlohmann::json& j) {
  const std::string payload = j.dump();
  if (payload.size() > kMaxFrameBytes) throw WireError("frame exceeds " + std::to_string(kMaxFrameBytes) + " bytes");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += payload;
  return out;
}

void FrameDecoder::feed(const char* data, std::size_t n) { buffer_.append(data, n); }

std::optional<nlohmann::json> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data());
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
                          std::uint32_t{p[3]};
  if (n > kMaxFrameBytes) throw WireError("incoming frame of " + std::to_string(n) + " bytes exceeds the limit");
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  const std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  try {
    return nlohmann::json::parse(payload);
  } catch (const nlohmann::json::parse_error& e) {
    throw WireError(std::string("frame is not valid JSON: ") + e.what());
  }
}

namespace {

double finite_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) throw WireError(std::string("field '") + key + "' must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) throw WireError(std::string("field '") + key + "' must be finite");
  return v;
}

std::vector<double> number_array(const nlohmann::json& j, const char* key, std::size_t n) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != n) {
    throw WireError(std::string("field '") + key + "' must be an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (const auto& x : j.at(key)) {
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      throw WireError(std::string("field '") + key + "' must hold finite numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

InboundMessage parse_inbound(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw WireError("message must be an object with a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "hello") {
    HelloMsg m;
    if (!j.contains("version") || !j.at("version").is_number_integer()) throw WireError("hello needs an integer 'version'");
    m.version = j.at("version").get<int>();
    m.config_hash = j.value("config_hash", std::string());
    m.client = j.value("client", std::string());
    return m;
  }
  if (type == "body_pose") {
    BodyPoseMsg m;
    m.t = finite_number(j, "t");
    const auto tr = number_array(j, "translation", 3);
    m.translation = Vec3(tr[0], tr[1], tr[2]);
    const auto q = number_array(j, "quaternion", 4);
    const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (std::abs(norm - 1.0) > Rotation::kRejectDefect) {
      throw WireError("body_pose quaternion norm " + std::to_string(norm) + " is too far from 1");
    }
    m.quaternion = {q[0], q[1], q[2], q[3]};
    return m;
  }
  if (type == "joystick") {
    JoystickMsg m;
    m.t = finite_number(j, "t");
    const auto d = number_array(j, "deflection", 3);
    for (double x : d) {
      if (x < -1.0 || x > 1.0) throw WireError("joystick deflection components must lie in [-1, 1]");
    }
    m.deflection = Vec3(d[0], d[1], d[2]);
    return m;
  }
  if (type == "set_mode") {
    if (!j.contains("mode") || !j.at("mode").is_string()) throw WireError("set_mode needs a string 'mode'");
    try {
      return SetModeMsg{control_mode_from_string(j.at("mode").get<std::string>())};
    } catch (const std::invalid_argument& e) {
      throw WireError(e.what());
    }
  }
  if (type == "start_trial") return StartTrialMsg{};
  if (type == "heartbeat") {
    HeartbeatMsg m;
    m.seq = j.value("seq", std::int64_t{0});
    m.t = j.contains("t") ? finite_number(j, "t") : 0.0;
    return m;
  }
  throw WireError("unknown message type '" + type + "'");
}

nlohmann::json to_json(const InboundMessage& m) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          return {{"type", "hello"}, {"version", v.version}, {"config_hash", v.config_hash}, {"client", v.client}};
        } else if constexpr (std::is_same_v<T, BodyPoseMsg>) {
          return {{"type", "body_pose"},
                  {"t", v.t},
                  {"translation", {v.translation[0], v.translation[1], v.translation[2]}},
                  {"quaternion", v.quaternion}};
        } else if constexpr (std::is_same_v<T, JoystickMsg>) {
          return {{"type", "joystick"}, {"t", v.t}, {"deflection", {v.deflection[0], v.deflection[1], v.deflection[2]}}};
        } else if constexpr (std::is_same_v<T, SetModeMsg>) {
          return {{"type", "set_mode"}, {"mode", to_string(v.mode)}};
        } else if constexpr (std::is_same_v<T, StartTrialMsg>) {
          return {{"type", "start_trial"}};
        } else {
          return {{"type", "heartbeat"}, {"seq", v.seq}, {"t", v.t}};
        }
      },
      m);
}

Transform body_pose_world(const FrameRegistry& reg, const BodyPoseMsg& m) {
  Transform optical;
  optical.rotation = Rotation::from_quaternion(m.quaternion[0], m.quaternion[1], m.quaternion[2], m.quaternion[3]);
  optical.translation = m.translation;
  return to_world(reg, Frame::Optical, optical);
}

int listen_tcp(int port, bool any) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw WireError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(any ? INADDR_ANY : INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw WireError("cannot bind port " + std::to_string(port) + ": " + err);
  }
  if (::listen(fd, 8) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw WireError("listen: " + err);
  }
  return fd;
}

int bound_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw WireError(std::string("getsockname: ") + std::strerror(errno));
  }
  return ntohs(addr.sin_port);
}

int connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    throw WireError("cannot resolve " + host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw WireError(std::string("socket: ") + std::strerror(errno));
  }
  const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw WireError("cannot connect to " + host + ":" + service + ": " + err);
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

void send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw WireError(std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

WireClient::WireClient(const std::string& host, int port) : fd_(connect_tcp(host, port)) {}

WireClient::~WireClient() { close(); }

void WireClient::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

nlohmann::json WireClient::handshake(const std::string& client_name) {
  const auto hello = receive(2000);
  if (!hello || hello->value("type", std::string()) != "hello") throw WireError("server did not send a hello");
  const int version = hello->value("version", -1);
  if (version != kWireProtocolVersion) {
    throw WireError("server speaks wire protocol " + std::to_string(version) + ", this client speaks " +
                    std::to_string(kWireProtocolVersion));
  }
  send(InboundMessage{HelloMsg{kWireProtocolVersion, hello->value("config_hash", std::string()), client_name}});
  return *hello;
}

void WireClient::send(const nlohmann::json& j) {
  if (fd_ < 0) throw WireError("client is closed");
  send_all(fd_, encode_frame(j));
}

std::optional<nlohmann::json> WireClient::receive(int timeout_ms) {
  if (fd_ < 0) throw WireError("client is closed");
  if (auto f = decoder_.next()) return f;
  pollfd p{fd_, POLLIN, 0};
  char buf[65536];
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    const int rc = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, left.count())));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw WireError(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) return std::nullopt;
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n == 0) throw WireError("server closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw WireError(std::string("recv: ") + std::strerror(errno));
    }
    decoder_.feed(buf, static_cast<std::size_t>(n));
    if (auto f = decoder_.next()) return f;
  }
}

}  // namespace bodylink
