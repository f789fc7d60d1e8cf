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

#ifndef CHILD_RETARGET_H_
#define CHILD_RETARGET_H_

// Direct joint retargeting: leader joint positions are mapped pair by pair
// onto follower joint targets, and the leader IMU orientation becomes either
// torso joint commands or a world-frame base orientation.

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "child/config.h"
#include "child/error.h"
#include "child/frame_codec.h"

namespace child {

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double Norm() const;
  Quaternion Normalized() const;
  static Quaternion FromFrame(const std::array<float, 4>& wxyz);
  std::array<float, 4> ToFrame() const;

  bool operator==(const Quaternion&) const = default;
};

// Intrinsic Z-Y-X (yaw, then pitch, then roll). pitch is in [-pi/2, pi/2];
// roll and yaw in (-pi, pi].
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

class NonUnitQuaternion : public Error {
 public:
  explicit NonUnitQuaternion(const std::string& message)
      : Error("retarget", "NonUnitQuaternion: " + message) {}
};

// Half-width of the band around |pitch| = pi/2 where roll is pinned to 0
// and the whole twist is folded into yaw.
inline constexpr double kGimbalLockBand = 1e-3;

EulerAngles QuatToEuler(const Quaternion& q);  // throws NonUnitQuaternion
Quaternion EulerToQuat(const EulerAngles& e);

using ImuCommand = std::variant<EulerAngles, Quaternion>;

// TorsoJoints -> EulerAngles; FloatingBase -> the quaternion itself.
// Throws Error for Disabled.
ImuCommand ImuToCommand(const Quaternion& orientation, ImuMode mode);

struct RetargetOutput {
  // Follower joint order.
  std::vector<double> follower_targets;
  std::optional<EulerAngles> torso_command;
  std::optional<Quaternion> base_orientation;
  std::vector<std::string> clamped_joints;
};

// Throws SchemaMismatch when the frame does not match the leader schema.
RetargetOutput MapJoints(const StateFrame& leader_state,
                         const TeleopPlan& plan);

}  // namespace child

#endif  // CHILD_RETARGET_H_
