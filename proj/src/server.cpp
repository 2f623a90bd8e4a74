#include "bodylink/server.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace bodylink {

struct Server::Client {
  int fd = -1;
  std::mutex write_mutex;
  std::atomic<bool> ready{false};  // handshake done
  std::atomic<bool> alive{true};
  double last_body_t = -1e300;
  double last_joystick_t = -1e300;
  std::thread reader;
};

Server::Server(const SessionConfig& cfg, SessionMeta meta, LogSink* sink, ServerOptions options)
    : cfg_(cfg), meta_(std::move(meta)), sink_(sink), options_(options) {
  if (meta_.config_hash.empty()) meta_.config_hash = cfg_.config_hash;
}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  listen_fd_ = listen_tcp(options_.port, options_.listen_any);
  port_ = bound_port(listen_fd_);
  running_ = true;
  loop_thread_ = std::thread([this] { control_loop(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (loop_thread_.joinable()) loop_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::shared_ptr<Client>> clients;
  {
    std::lock_guard<std::mutex> lock(clients_mutex_);
    clients.swap(clients_);
  }
  for (auto& c : clients) {
    c->alive = false;
    ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : clients) {
    if (c->reader.joinable()) c->reader.join();
    ::close(c->fd);
  }
}

std::size_t Server::client_count() const {
  std::lock_guard<std::mutex> lock(clients_mutex_);
  std::size_t n = 0;
  for (const auto& c : clients_) n += c->alive ? 1 : 0;
  return n;
}

void Server::send_to(Client& c, const nlohmann::json& j) {
  if (!c.alive) return;
  std::lock_guard<std::mutex> lock(c.write_mutex);
  try {
    send_all(c.fd, encode_frame(j));
  } catch (const WireError&) {
    c.alive = false;
  }
}

void Server::broadcast(const std::string& frame) {
  std::vector<std::shared_ptr<Client>> clients;
  {
    std::lock_guard<std::mutex> lock(clients_mutex_);
    clients = clients_;
  }
  for (auto& c : clients) {
    if (!c->ready || !c->alive) continue;
    std::lock_guard<std::mutex> lock(c->write_mutex);
    try {
      send_all(c->fd, frame);
    } catch (const WireError&) {
      c->alive = false;
    }
  }
}

void Server::enqueue(InboundMessage m) {
  std::lock_guard<std::mutex> lock(queue_mutex_);
  queue_.push_back(std::move(m));
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto c = std::make_shared<Client>();
    c->fd = fd;
    send_to(*c, {{"type", "hello"},
                 {"version", kWireProtocolVersion},
                 {"config_hash", meta_.config_hash},
                 {"session", meta_.session_id},
                 {"dt", cfg_.dt()},
                 {"tick_rate_telemetry", cfg_.tick_rate_telemetry}});
    {
      std::lock_guard<std::mutex> lock(clients_mutex_);
      clients_.push_back(c);
      had_client_ = true;
    }
    c->reader = std::thread([this, c] { reader_loop(c); });
  }
}

void Server::reader_loop(std::shared_ptr<Client> client) {
  FrameDecoder decoder;
  char buf[65536];
  auto error = [&](const std::string& msg) { send_to(*client, {{"type", "error"}, {"message", msg}}); };
  while (running_ && client->alive) {
    pollfd p{client->fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, 50);
    if (rc == 0) continue;
    if (rc < 0) break;
    const ssize_t n = ::recv(client->fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    decoder.feed(buf, static_cast<std::size_t>(n));
    try {
      while (auto frame = decoder.next()) {
        InboundMessage m;
        try {
          m = parse_inbound(*frame);
        } catch (const WireError& e) {
          error(e.what());
          continue;
        }
        if (auto* hello = std::get_if<HelloMsg>(&m)) {
          if (hello->version != kWireProtocolVersion) {
            error("wire protocol " + std::to_string(hello->version) + " is not supported (server speaks " +
                  std::to_string(kWireProtocolVersion) + ")");
            client->alive = false;
            break;
          }
          client->ready = true;
          continue;
        }
        if (!client->ready) {
          error("send hello before any other message");
          continue;
        }
        if (const auto* hb = std::get_if<HeartbeatMsg>(&m)) {
          send_to(*client, {{"type", "heartbeat_ack"}, {"seq", hb->seq}, {"t", hb->t},
                            {"session_t", session_time_.load()}});
          continue;
        }
        if (const auto* body = std::get_if<BodyPoseMsg>(&m)) {
          if (body->t <= client->last_body_t) {
            error("body_pose timestamps must increase");
            continue;
          }
          client->last_body_t = body->t;
        }
        if (const auto* joy = std::get_if<JoystickMsg>(&m)) {
          if (joy->t <= client->last_joystick_t) {
            error("joystick timestamps must increase");
            continue;
          }
          client->last_joystick_t = joy->t;
        }
        enqueue(std::move(m));
      }
    } catch (const WireError& e) {
      error(e.what());
      break;
    }
  }
  client->alive = false;
}

void Server::control_loop() {
  Session session(cfg_, meta_, sink_);
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(cfg_.dt()));
  auto next = std::chrono::steady_clock::now();
  std::vector<InboundMessage> batch;

  auto event_frame = [&](const TrialEvent& e) {
    nlohmann::json j = to_json(e);
    j["type"] = "event";
    j["session"] = meta_.session_id;
    j["config_hash"] = meta_.config_hash;
    j["trial"] = session.trial_count();
    j["mode"] = to_string(session.mode());
    return encode_frame(j);
  };
  auto snapshot_frame = [&] { return encode_frame(to_json(session.snapshot(), "snapshot")); };

  while (running_) {
    next += period;
    std::this_thread::sleep_until(next);

    {
      std::lock_guard<std::mutex> lock(queue_mutex_);
      batch.swap(queue_);
    }
    TickInputs inputs;
    for (const InboundMessage& m : batch) {
      if (const auto* body = std::get_if<BodyPoseMsg>(&m)) {
        try {
          inputs.body = BodyState{body_pose_world(cfg_.registry, *body), session.time() + cfg_.dt()};
        } catch (const GeometryError&) {
          // Rejected on parse already; a degenerate quaternion is dropped.
        }
      } else if (const auto* joy = std::get_if<JoystickMsg>(&m)) {
        inputs.joystick = cfg_.mode.sample_from_deflection(joy->deflection, session.time() + cfg_.dt());
      } else if (const auto* sm = std::get_if<SetModeMsg>(&m)) {
        if (!session.set_mode(sm->mode)) {
          broadcast(encode_frame({{"type", "error"}, {"message", "mode can only change between trials"}}));
        }
      } else if (std::holds_alternative<StartTrialMsg>(m)) {
        if (session.trial_running()) {
          broadcast(encode_frame({{"type", "error"}, {"message", "a trial is already running"}}));
        } else {
          session.start_trial();
          const Trial& trial = *session.trial();
          broadcast(event_frame({session.time(), EventKind::TargetShown, 0, session.effector().translation,
                                 trial.current_target(), {}}));
          broadcast(snapshot_frame());
        }
      }
    }
    batch.clear();

    bool clients_gone = false;
    {
      std::lock_guard<std::mutex> lock(clients_mutex_);
      if (had_client_) {
        clients_gone = true;
        for (const auto& c : clients_) clients_gone = clients_gone && !c->alive;
      }
    }
    if (clients_gone && session.trial_running()) session.abort_trial("input stream closed");

    const TickResult r = session.tick(inputs);
    ticks_ = session.tick_index();
    session_time_ = session.time();
    for (const TrialEvent& e : r.events) broadcast(event_frame(e));
    if (r.telemetry_tick || !r.events.empty()) broadcast(snapshot_frame());

    // Fall behind gracefully instead of bursting to catch up.
    const auto now = std::chrono::steady_clock::now();
    if (now - next > 10 * period) next = now;
  }
  if (session.trial_running()) session.abort_trial("server stopped");
}

}  // namespace bodylink
