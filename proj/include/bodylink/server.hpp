#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bodylink/config.hpp"
#include "bodylink/session.hpp"
#include "bodylink/wire.hpp"

namespace bodylink {

struct ServerOptions {
  int port = 0;  // 0 picks an ephemeral port
  bool listen_any = false;
};

/// Live session endpoint. One loop thread owns the Session and ticks it at
/// the control rate on a wall-clock schedule; per-client reader threads
/// push messages into a queue that the loop drains each tick (body pose and
/// joystick latest-wins, commands in arrival order). Snapshots go out to
/// every connected client at the telemetry rate, events as they happen.
class Server {
 public:
  Server(const SessionConfig& cfg, SessionMeta meta, LogSink* sink, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  /// Aborts a running trial, closes all connections and joins the threads.
  void stop();

  int port() const { return port_; }
  bool running() const { return running_; }
  std::int64_t ticks() const { return ticks_; }
  std::size_t client_count() const;

 private:
  struct Client;

  void accept_loop();
  void reader_loop(std::shared_ptr<Client> client);
  void control_loop();
  void broadcast(const std::string& frame);
  void enqueue(InboundMessage m);
  void send_to(Client& c, const nlohmann::json& j);

  SessionConfig cfg_;
  SessionMeta meta_;
  LogSink* sink_;
  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::int64_t> ticks_{0};
  std::atomic<double> session_time_{0.0};

  mutable std::mutex clients_mutex_;
  std::vector<std::shared_ptr<Client>> clients_;
  bool had_client_ = false;

  std::mutex queue_mutex_;
  std::vector<InboundMessage> queue_;

  std::thread accept_thread_;
  std::thread loop_thread_;
};

}  // namespace bodylink
