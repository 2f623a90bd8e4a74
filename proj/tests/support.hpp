// Shared helpers and independent oracles for the test binaries.
#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "bodylink/config.hpp"
#include "bodylink/se3.hpp"

namespace testsupport {

inline std::string source_path(const std::string& rel) { return std::string(BODYLINK_SOURCE_DIR) + "/" + rel; }

inline const bodylink::SessionConfig& default_config() {
  static const bodylink::SessionConfig cfg = bodylink::load_session_config(source_path("config/default.json"));
  return cfg;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bodylink_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bodylink::Vec3 vec(double half) { return {uniform(-half, half), uniform(-half, half), uniform(-half, half)}; }
  /// Uniform random rotation via a normalized Gaussian quaternion.
  bodylink::Rotation rotation() {
    std::normal_distribution<double> n;
    return bodylink::Rotation::from_quaternion(n(gen_), n(gen_), n(gen_), n(gen_));
  }
  bodylink::Transform transform(double spread = 2.0) { return {rotation(), vec(spread)}; }
  std::mt19937_64& gen() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Quaternion-logarithm oracle for the rotation vector: converts the matrix
/// with Eigen's quaternion routine and returns 2·atan2(|v|, w)·v/|v| with
/// w ≥ 0. Independent of the library's angle_axis.
inline bodylink::Vec3 quaternion_log(const bodylink::Mat3& m) {
  Eigen::Quaterniond q(m);
  if (q.w() < 0) q.coeffs() *= -1.0;
  const bodylink::Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-300) return bodylink::Vec3::Zero();
  return 2.0 * std::atan2(s, q.w()) * v / s;
}

inline double max_abs(const bodylink::Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testsupport
