#include "bodylink/logs.hpp"

#include <filesystem>
#include <fstream>

namespace bodylink {

namespace {

std::string where(const std::string& name, std::size_t line) { return name + ":" + std::to_string(line); }

LogHeader parse_header(const std::string& text, const std::string& name, const std::string& expected_log) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LogFormatError(where(name, 1) + ": header is not valid JSON: " + e.what());
  }
  if (j.value("type", std::string()) != "header") throw LogFormatError(where(name, 1) + ": missing header line");
  LogHeader h;
  h.schema_version = j.value("schema_version", 0);
  if (h.schema_version != kLogSchemaVersion) {
    throw LogFormatError(where(name, 1) + ": log schema version " + std::to_string(h.schema_version) +
                         " is not supported by this build (version " + std::to_string(kLogSchemaVersion) + ")");
  }
  try {
    h.log = j.at("log").get<std::string>();
    if (h.log != expected_log) {
      throw LogFormatError(where(name, 1) + ": expected a " + expected_log + " log, found " + h.log);
    }
    h.session_id = j.at("session").get<std::string>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.participant_id = j.value("participant_id", std::string());
    h.policy = j.value("policy", std::string());
    h.mode = j.value("mode", std::string());
    h.dt = j.value("dt", 0.0);
    h.tick_rate_telemetry = j.value("tick_rate_telemetry", 0.0);
    h.spec = trial_spec_from_json(j.at("spec"));
  } catch (const nlohmann::json::exception& e) {
    throw LogFormatError(where(name, 1) + ": malformed header: " + e.what());
  }
  return h;
}

}  // namespace

EventLog read_event_log(std::istream& in, const std::string& name) {
  EventLog log;
  log.path = name;
  std::string text;
  if (!std::getline(in, text)) throw LogFormatError(name + ": empty event log");
  log.header = parse_header(text, name, "events");
  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(text);
      LoggedEvent e;
      e.event = trial_event_from_json(j);
      e.trial = j.at("trial").get<int>();
      e.mode = j.value("mode", log.header.mode);
      e.line = line;
      log.events.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw LogFormatError(where(name, line) + ": malformed event: " + e.what());
    }
  }
  return log;
}

EventLog load_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogFormatError("cannot open event log " + path);
  return read_event_log(in, path);
}

TelemetryLog read_telemetry_log(std::istream& in, const std::string& name) {
  TelemetryLog log;
  log.path = name;
  std::string text;
  if (!std::getline(in, text)) throw LogFormatError(name + ": empty telemetry log");
  log.header = parse_header(text, name, "telemetry");
  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      log.rows.push_back(snapshot_from_json(nlohmann::json::parse(text)));
    } catch (const std::exception& e) {
      throw LogFormatError(where(name, line) + ": malformed telemetry row: " + e.what());
    }
  }
  return log;
}

TelemetryLog load_telemetry_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogFormatError("cannot open telemetry log " + path);
  return read_telemetry_log(in, path);
}

std::string telemetry_path_for(const std::string& events_path) {
  const std::string suffix = ".events.jsonl";
  if (events_path.size() >= suffix.size() &&
      events_path.compare(events_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return events_path.substr(0, events_path.size() - suffix.size()) + ".telemetry.jsonl";
  }
  throw LogFormatError(events_path + ": event logs must end in " + suffix);
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const std::string& l : lines) out << l << '\n';
}

}  // namespace bodylink
