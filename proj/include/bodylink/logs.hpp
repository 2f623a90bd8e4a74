#pragma once

#include <cstddef>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bodylink/session.hpp"
#include "bodylink/trial.hpp"

namespace bodylink {

/// Malformed or incompatible log. The message names the file and line.
class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogHeader {
  int schema_version = 0;
  std::string log;  // "events" or "telemetry"
  std::string session_id;
  std::string config_hash;
  std::string participant_id;
  std::string policy;
  std::string mode;
  double dt = 0.0;
  double tick_rate_telemetry = 0.0;
  TrialSpec spec;
};

struct LoggedEvent {
  TrialEvent event;
  int trial = 0;
  std::string mode;
  std::size_t line = 0;  // 1-based line number in the file
};

struct EventLog {
  std::string path;
  LogHeader header;
  std::vector<LoggedEvent> events;
};

struct TelemetryLog {
  std::string path;
  LogHeader header;
  std::vector<OutboundSnapshot> rows;
};

EventLog read_event_log(std::istream& in, const std::string& name);
EventLog load_event_log(const std::string& path);
TelemetryLog read_telemetry_log(std::istream& in, const std::string& name);
TelemetryLog load_telemetry_log(const std::string& path);

/// "x.events.jsonl" → "x.telemetry.jsonl".
std::string telemetry_path_for(const std::string& events_path);

/// Writes lines with '\n' terminators.
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace bodylink
