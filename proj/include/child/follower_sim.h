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

#ifndef CHILD_FOLLOWER_SIM_H_
#define CHILD_FOLLOWER_SIM_H_

// Kinematic stand-in for the follower robot. Joints follow their targets
// with a rate-capped first-order response; the base integrates the planar
// velocity command in place of a walking controller.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "child/config.h"
#include "child/locomotion.h"
#include "child/retarget.h"

namespace child {

// Everything the session hands to the follower in one tick.
struct CommandSet {
  // Absent means "no joint command": the follower keeps its current pose.
  std::optional<std::vector<double>> joint_targets;
  // Follower gripper order; absent entries hold.
  std::vector<std::optional<double>> gripper_targets;
  VelocityCommand velocity;
  std::optional<Quaternion> base_orientation;
  // Leader joint order, sent back to the leader device.
  std::vector<double> feedback_torques;
  std::vector<std::string> clamped_joints;
  // Set when the link was stale or the frame was rejected.
  bool hold = false;
};

struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]

  bool operator==(const BasePose&) const = default;
};

struct FollowerState {
  std::vector<double> joints;
  std::vector<double> grippers;  // aperture command in [0, 1]
  BasePose base;
  Quaternion base_orientation;
  std::int64_t time_ns = 0;
};

struct TrackingParams {
  std::vector<double> time_constant_s;
  std::vector<double> velocity_cap;
  std::vector<double> position_min;
  std::vector<double> position_max;

  static TrackingParams FromConfig(const DeviceConfig& follower);
};

FollowerState InitialFollowerState(const DeviceConfig& follower);

double WrapAngle(double angle);

// Throws Error unless dt_s is in (0, 0.1].
FollowerState StepFollower(const FollowerState& state, const CommandSet& cmd,
                           double dt_s, const TrackingParams& params);

}  // namespace child

#endif  // CHILD_FOLLOWER_SIM_H_
