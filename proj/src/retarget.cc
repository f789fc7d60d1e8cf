// Copyright 2026 The CHILD Teleop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "child/retarget.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace child {
namespace {

constexpr double kPi = std::numbers::pi;

// Maps an atan2 result onto (-pi, pi].
double HalfOpenAngle(double a) { return a <= -kPi ? a + 2.0 * kPi : a; }

}  // namespace

double Quaternion::Norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::Normalized() const {
  const double n = Norm();
  return {w / n, x / n, y / n, z / n};
}

Quaternion Quaternion::FromFrame(const std::array<float, 4>& wxyz) {
  return Quaternion{wxyz[0], wxyz[1], wxyz[2], wxyz[3]}.Normalized();
}

std::array<float, 4> Quaternion::ToFrame() const {
  return {static_cast<float>(w), static_cast<float>(x), static_cast<float>(y),
          static_cast<float>(z)};
}

EulerAngles QuatToEuler(const Quaternion& q) {
  if (!(std::abs(q.Norm() - 1.0) <= 1e-6)) {
    throw NonUnitQuaternion("norm " + std::to_string(q.Norm()));
  }
  const auto [w, x, y, z] = q;
  // Rotation matrix entries used by the decomposition.
  const double r00 = 1.0 - 2.0 * (y * y + z * z);
  const double r10 = 2.0 * (x * y + w * z);
  const double r20 = 2.0 * (x * z - w * y);
  const double r21 = 2.0 * (y * z + w * x);
  const double r22 = 1.0 - 2.0 * (x * x + y * y);
  const double r01 = 2.0 * (x * y - w * z);
  const double r11 = 1.0 - 2.0 * (x * x + z * z);

  EulerAngles e;
  e.pitch = std::atan2(-r20, std::hypot(r00, r10));
  if (std::abs(e.pitch) > kPi / 2.0 - kGimbalLockBand) {
    e.roll = 0.0;
    e.yaw = HalfOpenAngle(std::atan2(-r01, r11));
  } else {
    e.roll = HalfOpenAngle(std::atan2(r21, r22));
    e.yaw = HalfOpenAngle(std::atan2(r10, r00));
  }
  return e;
}

Quaternion EulerToQuat(const EulerAngles& e) {
  const double cr = std::cos(e.roll / 2.0), sr = std::sin(e.roll / 2.0);
  const double cp = std::cos(e.pitch / 2.0), sp = std::sin(e.pitch / 2.0);
  const double cy = std::cos(e.yaw / 2.0), sy = std::sin(e.yaw / 2.0);
  return {cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy,
          cr * sp * cy + sr * cp * sy, cr * cp * sy - sr * sp * cy};
}

ImuCommand ImuToCommand(const Quaternion& orientation, ImuMode mode) {
  switch (mode) {
    case ImuMode::kTorsoJoints:
      return QuatToEuler(orientation);
    case ImuMode::kFloatingBase:
      if (!(std::abs(orientation.Norm() - 1.0) <= 1e-6)) {
        throw NonUnitQuaternion("norm " + std::to_string(orientation.Norm()));
      }
      return orientation;
    case ImuMode::kDisabled:
      break;
  }
  throw Error("retarget", "imu_mode disabled has no IMU command");
}

RetargetOutput MapJoints(const StateFrame& leader_state,
                         const TeleopPlan& plan) {
  const std::size_t n_leader = plan.leader_joints.size();
  if (leader_state.joint_positions.size() != n_leader) {
    throw SchemaMismatch("retarget",
                         "frame has " +
                             std::to_string(leader_state.joint_positions.size()) +
                             " joints, leader config has " +
                             std::to_string(n_leader));
  }
  RetargetOutput out;
  out.follower_targets.reserve(plan.follower_joints.size());
  for (const JointSpec& joint : plan.follower_joints) {
    out.follower_targets.push_back(joint.home_position);
  }

  auto set_clamped = [&](std::size_t index, double value) {
    const JointSpec& joint = plan.follower_joints[index];
    const double clamped = joint.Clamp(value);
    if (clamped != value) out.clamped_joints.push_back(joint.name);
    out.follower_targets[index] = clamped;
  };

  for (const TeleopPlan::Pair& pair : plan.pairs) {
    const double q = leader_state.joint_positions[pair.leader];
    set_clamped(pair.follower, pair.sign * q + pair.offset);
  }

  const Quaternion orientation =
      Quaternion::FromFrame(leader_state.orientation);
  switch (plan.mapping.imu_mode) {
    case ImuMode::kTorsoJoints: {
      const EulerAngles e = QuatToEuler(orientation);
      out.torso_command = e;
      if (plan.torso) {
        set_clamped((*plan.torso)[0], e.yaw);
        set_clamped((*plan.torso)[1], e.roll);
        set_clamped((*plan.torso)[2], e.pitch);
      }
      break;
    }
    case ImuMode::kFloatingBase:
      // Torso joints keep the home value written above.
      out.base_orientation = orientation;
      break;
    case ImuMode::kDisabled:
      break;
  }
  return out;
}

}  // namespace child
