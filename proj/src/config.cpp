#include "bodylink/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bodylink {

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

void SessionConfig::validate() const {
  arm.validate(kArmDof);
  servo.validate();
  mode.validate();
  trial.validate();
  operator_policy.validate();
  if (!(tick_rate_control > 0.0 && tick_rate_telemetry > 0.0)) throw ConfigError("tick rates must be positive");
  if (tick_rate_control < tick_rate_telemetry) {
    throw ConfigError("tick_rate_control must be at least tick_rate_telemetry");
  }
  if (!(body_timeout > 0.0)) throw ConfigError("body_timeout must be positive");
  if (!(target_timeout > 0.0)) throw ConfigError("target_timeout must be positive");
}

SessionConfig session_config_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  try {
    const int version = doc.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
      throw ConfigError("config schema_version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    }
    SessionConfig cfg;
    cfg.canonical = doc;
    if (doc.contains("registry")) cfg.registry = registry_from_json(doc.at("registry"));

    const auto& arm_ref = doc.at("arm");
    nlohmann::json arm_doc;
    if (arm_ref.is_string()) {
      std::filesystem::path p(arm_ref.get<std::string>());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      std::ifstream in(p);
      if (!in) throw ConfigError("cannot open arm description " + p.string());
      arm_doc = nlohmann::json::parse(in);
    } else {
      arm_doc = arm_ref;
    }
    cfg.canonical["arm"] = arm_doc;
    cfg.arm = arm_from_json(arm_doc);
    cfg.arm.base_frame = to_world(cfg.registry, Frame::RobotBase, cfg.arm.base_frame);

    cfg.tick_rate_control = doc.value("tick_rate_control", cfg.tick_rate_control);
    cfg.tick_rate_telemetry = doc.value("tick_rate_telemetry", cfg.tick_rate_telemetry);
    if (doc.contains("servo")) cfg.servo = servo_config_from_json(doc.at("servo"));
    cfg.servo.dt = 1.0 / cfg.tick_rate_control;
    if (doc.contains("mode")) cfg.mode = mode_config_from_json(doc.at("mode"));

    nlohmann::json trial_doc = doc.value("trial", nlohmann::json::object());
    cfg.trial = trial_spec_from_json(trial_doc);
    if (!trial_doc.contains("center") || trial_doc.at("center").is_null()) {
      cfg.trial.center = forward_kinematics(cfg.arm, {cfg.arm.home, 0.0}).translation;
    }
    cfg.trial.mode = cfg.mode.mode;

    if (doc.contains("initial_body")) cfg.initial_body_optical = transform_from_json(doc.at("initial_body"));
    cfg.body_timeout = doc.value("body_timeout", cfg.body_timeout);
    cfg.target_timeout = doc.value("target_timeout", cfg.target_timeout);
    if (doc.contains("operator")) cfg.operator_policy = operator_policy_from_json(doc.at("operator"));
    cfg.participant_id = doc.value("participant_id", cfg.participant_id);
    cfg.log_dir = doc.value("log_dir", cfg.log_dir);

    cfg.config_hash = sha256_hex(cfg.canonical.dump());
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid session config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid session config: ") + e.what());
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("invalid session config: ") + e.what());
  }
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return session_config_from_json(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace bodylink
