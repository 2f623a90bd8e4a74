#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "bodylink/logs.hpp"

namespace bodylink {

struct ReplayFrame {
  double t = 0.0;  // session time the frame belongs to
  nlohmann::json frame;
};

/// The two header lines, then every telemetry row as a "snapshot" frame
/// merged in time order with the logged events. Events sharing a tick with
/// a snapshot come first, in log order. Lines are passed through unchanged
/// apart from the snapshot type. Both logs are validated first
/// (LogFormatError on schema mismatch or malformed lines).
std::vector<ReplayFrame> replay_frames(const std::vector<std::string>& event_lines,
                                       const std::vector<std::string>& telemetry_lines);
std::vector<ReplayFrame> replay_frames_from_files(const std::string& events_path);

/// Re-emits frames through `emit`, sleeping so that session time advances
/// `speed` times faster than wall time. speed <= 0 emits without pacing.
void replay_paced(const std::vector<ReplayFrame>& frames, double speed,
                  const std::function<void(const ReplayFrame&)>& emit);

/// Inverse of replay_frames: rebuilds the event and telemetry log lines.
struct RebuiltLogs {
  std::vector<std::string> event_lines;
  std::vector<std::string> telemetry_lines;
};
RebuiltLogs rebuild_logs(const std::vector<ReplayFrame>& frames);

/// Waits for one client on `port` (0: ephemeral, reported through
/// `on_listen`), sends the hello and streams the frames to it. Returns the
/// number of frames sent.
std::size_t replay_to_port(const std::vector<ReplayFrame>& frames, int port, double speed,
                           const std::string& config_hash, int accept_timeout_ms = 30000,
                           const std::function<void(int)>& on_listen = {});

}  // namespace bodylink
