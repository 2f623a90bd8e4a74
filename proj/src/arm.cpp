#include "bodylink/arm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace bodylink {

void SerialArm::validate(int expected_dof) const {
  if (joints.empty()) throw std::invalid_argument("arm has no joints");
  if (expected_dof > 0 && dof() != expected_dof) {
    throw std::invalid_argument("arm must have exactly " + std::to_string(expected_dof) + " joints, got " +
                                std::to_string(dof()));
  }
  for (int i = 0; i < dof(); ++i) {
    const auto& jt = joints[static_cast<std::size_t>(i)];
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("joint " + std::to_string(i) + " axis is not unit-norm");
    }
    if (!(jt.min_angle < jt.max_angle)) {
      throw std::invalid_argument("joint " + std::to_string(i) + " has min >= max");
    }
  }
  if (!(joint_velocity_limit > 0.0)) throw std::invalid_argument("joint velocity limit must be positive");
  if (home.size() != 0 && home.size() != dof()) throw std::invalid_argument("home configuration has wrong size");
}

void ServoConfig::validate() const {
  if (!(gain_k > 0.0)) throw std::invalid_argument("servo gain must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("servo dt must be positive");
  if (!(dt * gain_k < 0.5)) throw std::invalid_argument("servo dt*gain must stay below 0.5");
  if (damping_lambda < 0.0) throw std::invalid_argument("damping must be non-negative");
  if (!(workspace_box.min.array() <= workspace_box.max.array()).all()) {
    throw std::invalid_argument("workspace box min exceeds max");
  }
}

namespace {

// Frame of each joint (before its own rotation) plus the effector pose.
struct ChainFrames {
  std::vector<Transform> joint_frames;
  Transform effector;
};

ChainFrames chain_frames(const SerialArm& arm, const JointState& q) {
  if (q.angles.size() != arm.dof()) throw std::invalid_argument("joint state size does not match arm");
  ChainFrames out;
  out.joint_frames.reserve(arm.joints.size());
  Transform t = arm.base_frame;
  for (int i = 0; i < arm.dof(); ++i) {
    const auto& jt = arm.joints[static_cast<std::size_t>(i)];
    t = compose(t, jt.fixed_from_parent);
    out.joint_frames.push_back(t);
    t = compose(t, Transform{Rotation::about_axis(jt.axis, q.angles[i]), Vec3::Zero()});
  }
  out.effector = compose(t, arm.flange_to_effector);
  return out;
}

}  // namespace

Transform forward_kinematics(const SerialArm& arm, const JointState& q) {
  return chain_frames(arm, q).effector;
}

Jacobian geometric_jacobian(const SerialArm& arm, const JointState& q) {
  const ChainFrames frames = chain_frames(arm, q);
  const Vec3& pe = frames.effector.translation;
  Jacobian jac(6, arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    const Transform& f = frames.joint_frames[static_cast<std::size_t>(i)];
    const Vec3 z = f.rotation * arm.joints[static_cast<std::size_t>(i)].axis;
    jac.block<3, 1>(0, i) = z.cross(pe - f.translation);
    jac.block<3, 1>(3, i) = z;
  }
  return jac;
}

Twist pose_error(const Transform& current, const Transform& desired) {
  Twist e;
  e.head<3>() = desired.translation - current.translation;
  e.tail<3>() = angle_axis(desired.rotation * current.rotation.transpose());
  return e;
}

Eigen::VectorXd damped_pseudo_inverse_solve(const Jacobian& j, double lambda, const Twist& v) {
  Eigen::Matrix<double, 6, 6> jjt = j * j.transpose();
  jjt.diagonal().array() += lambda * lambda;
  return j.transpose() * jjt.ldlt().solve(v);
}

ServoStep resolved_rate_step(const SerialArm& arm, const JointState& q, const Transform& desired,
                             const ServoConfig& cfg) {
  ServoStep out;
  Transform target = desired;
  target.translation = cfg.workspace_box.clamp(desired.translation);
  out.flags.workspace_clamped = target.translation != desired.translation;

  const Twist err = pose_error(forward_kinematics(arm, q), target);
  Eigen::VectorXd qdot = damped_pseudo_inverse_solve(geometric_jacobian(arm, q), cfg.damping_lambda,
                                                     cfg.gain_k * err);

  const double peak = qdot.cwiseAbs().maxCoeff();
  if (peak > arm.joint_velocity_limit) {
    qdot *= arm.joint_velocity_limit / peak;
    out.flags.velocity_saturated = true;
  }

  out.state.angles = q.angles + cfg.dt * qdot;
  for (int i = 0; i < arm.dof(); ++i) {
    const auto& jt = arm.joints[static_cast<std::size_t>(i)];
    const double clamped = std::clamp(out.state.angles[i], jt.min_angle, jt.max_angle);
    if (clamped != out.state.angles[i]) {
      out.state.angles[i] = clamped;
      out.flags.joint_limit_clamped = true;
    }
  }
  out.state.timestamp = q.timestamp + cfg.dt;
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const SerialArm& arm) {
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& jt : arm.joints) {
    joints.push_back({{"transform", to_json(jt.fixed_from_parent)},
                      {"axis", to_json(jt.axis)},
                      {"limits", {jt.min_angle, jt.max_angle}}});
  }
  nlohmann::json home = nlohmann::json::array();
  for (int i = 0; i < arm.home.size(); ++i) home.push_back(arm.home[i]);
  return {{"joints", joints},
          {"base_frame", to_json(arm.base_frame)},
          {"flange_to_effector", to_json(arm.flange_to_effector)},
          {"joint_velocity_limit", arm.joint_velocity_limit},
          {"home", home}};
}

SerialArm arm_from_json(const nlohmann::json& j) {
  SerialArm arm;
  for (const auto& jj : j.at("joints")) {
    RevoluteJoint jt;
    jt.fixed_from_parent = transform_from_json(jj.at("transform"));
    jt.axis = vec3_from_json(jj.at("axis"));
    const auto& lim = jj.at("limits");
    jt.min_angle = lim.at(0).get<double>();
    jt.max_angle = lim.at(1).get<double>();
    arm.joints.push_back(jt);
  }
  if (j.contains("base_frame")) arm.base_frame = transform_from_json(j.at("base_frame"));
  if (j.contains("flange_to_effector")) arm.flange_to_effector = transform_from_json(j.at("flange_to_effector"));
  arm.joint_velocity_limit = j.value("joint_velocity_limit", arm.joint_velocity_limit);
  if (j.contains("home")) {
    const auto& h = j.at("home");
    arm.home.resize(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) arm.home[static_cast<Eigen::Index>(i)] = h[i].get<double>();
  } else {
    arm.home = Eigen::VectorXd::Zero(arm.dof());
  }
  arm.validate();
  return arm;
}

SerialArm load_arm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open arm description " + path);
  return arm_from_json(nlohmann::json::parse(in));
}

nlohmann::json to_json(const ServoConfig& cfg) {
  return {{"gain_k", cfg.gain_k},
          {"damping_lambda", cfg.damping_lambda},
          {"dt", cfg.dt},
          {"workspace_box", {{"min", to_json(cfg.workspace_box.min)}, {"max", to_json(cfg.workspace_box.max)}}}};
}

ServoConfig servo_config_from_json(const nlohmann::json& j) {
  ServoConfig cfg;
  cfg.gain_k = j.value("gain_k", cfg.gain_k);
  cfg.damping_lambda = j.value("damping_lambda", cfg.damping_lambda);
  cfg.dt = j.value("dt", cfg.dt);
  if (j.contains("workspace_box")) {
    cfg.workspace_box.min = vec3_from_json(j.at("workspace_box").at("min"));
    cfg.workspace_box.max = vec3_from_json(j.at("workspace_box").at("max"));
  }
  cfg.validate();
  return cfg;
}

}  // namespace bodylink
