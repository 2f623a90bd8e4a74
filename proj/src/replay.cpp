#include "bodylink/replay.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "bodylink/wire.hpp"

namespace bodylink {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& l : lines) out += l + '\n';
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogFormatError("cannot open " + path);
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty()) lines.push_back(l);
  }
  return lines;
}

}  // namespace

std::vector<ReplayFrame> replay_frames(const std::vector<std::string>& event_lines,
                                       const std::vector<std::string>& telemetry_lines) {
  {
    std::istringstream ev(join_lines(event_lines));
    std::istringstream te(join_lines(telemetry_lines));
    const EventLog e = read_event_log(ev, "events");
    const TelemetryLog t = read_telemetry_log(te, "telemetry");
    if (e.header.session_id != t.header.session_id) {
      throw LogFormatError("event log session " + e.header.session_id + " does not match telemetry session " +
                           t.header.session_id);
    }
  }

  std::vector<ReplayFrame> out;
  out.push_back({0.0, nlohmann::json::parse(event_lines.front())});
  out.push_back({0.0, nlohmann::json::parse(telemetry_lines.front())});
  std::size_t ei = 1;
  std::size_t ti = 1;
  while (ei < event_lines.size() || ti < telemetry_lines.size()) {
    nlohmann::json ej;
    nlohmann::json tj;
    if (ei < event_lines.size()) ej = nlohmann::json::parse(event_lines[ei]);
    if (ti < telemetry_lines.size()) tj = nlohmann::json::parse(telemetry_lines[ti]);
    const bool take_event =
        ti >= telemetry_lines.size() || (ei < event_lines.size() && ej.at("t").get<double>() <= tj.at("t").get<double>());
    if (take_event) {
      out.push_back({ej.at("t").get<double>(), std::move(ej)});
      ++ei;
    } else {
      tj["type"] = "snapshot";
      out.push_back({tj.at("t").get<double>(), std::move(tj)});
      ++ti;
    }
  }
  return out;
}

std::vector<ReplayFrame> replay_frames_from_files(const std::string& events_path) {
  const std::vector<std::string> ev = read_lines(events_path);
  const std::string tpath = telemetry_path_for(events_path);
  const std::vector<std::string> te = read_lines(tpath);
  if (ev.empty()) throw LogFormatError(events_path + ": empty event log");
  if (te.empty()) throw LogFormatError(tpath + ": empty telemetry log");
  try {
    return replay_frames(ev, te);
  } catch (const LogFormatError& e) {
    throw LogFormatError(events_path + ": " + e.what());
  }
}

void replay_paced(const std::vector<ReplayFrame>& frames, double speed,
                  const std::function<void(const ReplayFrame&)>& emit) {
  if (frames.empty()) return;
  const auto start = std::chrono::steady_clock::now();
  const double t0 = frames.front().t;
  for (const ReplayFrame& f : frames) {
    if (speed > 0.0) {
      const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                   std::chrono::duration<double>((f.t - t0) / speed));
      std::this_thread::sleep_until(due);
    }
    emit(f);
  }
}

RebuiltLogs rebuild_logs(const std::vector<ReplayFrame>& frames) {
  RebuiltLogs out;
  for (const ReplayFrame& f : frames) {
    const std::string type = f.frame.value("type", std::string());
    if (type == "header") {
      (f.frame.value("log", std::string()) == "events" ? out.event_lines : out.telemetry_lines).push_back(f.frame.dump());
    } else if (type == "event") {
      out.event_lines.push_back(f.frame.dump());
    } else if (type == "snapshot") {
      nlohmann::json j = f.frame;
      j["type"] = "telemetry";
      out.telemetry_lines.push_back(j.dump());
    }
  }
  return out;
}

std::size_t replay_to_port(const std::vector<ReplayFrame>& frames, int port, double speed,
                           const std::string& config_hash, int accept_timeout_ms,
                           const std::function<void(int)>& on_listen) {
  const int lfd = listen_tcp(port);
  if (on_listen) on_listen(bound_port(lfd));
  pollfd p{lfd, POLLIN, 0};
  if (::poll(&p, 1, accept_timeout_ms) <= 0) {
    ::close(lfd);
    throw WireError("no client connected to port " + std::to_string(port) + " within " +
                    std::to_string(accept_timeout_ms) + " ms");
  }
  const int fd = ::accept(lfd, nullptr, nullptr);
  ::close(lfd);
  if (fd < 0) throw WireError("accept failed");
  std::size_t sent = 0;
  try {
    send_all(fd, encode_frame({{"type", "hello"},
                               {"version", kWireProtocolVersion},
                               {"config_hash", config_hash},
                               {"replay", true}}));
    replay_paced(frames, speed, [&](const ReplayFrame& f) {
      send_all(fd, encode_frame(f.frame));
      ++sent;
    });
    send_all(fd, encode_frame({{"type", "replay_end"}, {"frames", sent}}));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::shutdown(fd, SHUT_WR);
  // Let the client drain before closing.
  char buf[256];
  pollfd c{fd, POLLIN, 0};
  while (::poll(&c, 1, 1000) > 0 && ::recv(fd, buf, sizeof(buf), 0) > 0) {
  }
  ::close(fd);
  return sent;
}

}  // namespace bodylink
