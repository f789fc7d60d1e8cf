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

#include "child/follower_sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "child/error.h"

namespace child {

TrackingParams TrackingParams::FromConfig(const DeviceConfig& follower) {
  TrackingParams params;
  for (const JointSpec& joint : follower.FlatJoints()) {
    params.time_constant_s.push_back(follower.tracking.time_constant_s);
    params.velocity_cap.push_back(joint.velocity_max);
    params.position_min.push_back(joint.position_min);
    params.position_max.push_back(joint.position_max);
  }
  return params;
}

FollowerState InitialFollowerState(const DeviceConfig& follower) {
  FollowerState state;
  for (const JointSpec& joint : follower.FlatJoints()) {
    state.joints.push_back(joint.home_position);
  }
  state.grippers.assign(follower.GripperLimbs().size(), 0.0);
  return state;
}

double WrapAngle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

FollowerState StepFollower(const FollowerState& state, const CommandSet& cmd,
                           double dt_s, const TrackingParams& params) {
  if (!(dt_s > 0.0 && dt_s <= 0.1)) {
    throw Error("follower_sim", "dt must be in (0, 0.1] s");
  }
  FollowerState next = state;
  next.time_ns += static_cast<std::int64_t>(std::llround(dt_s * 1e9));

  if (cmd.joint_targets) {
    const std::vector<double>& targets = *cmd.joint_targets;
    for (std::size_t i = 0; i < next.joints.size() && i < targets.size(); ++i) {
      const double q = state.joints[i];
      const double alpha = 1.0 - std::exp(-dt_s / params.time_constant_s[i]);
      const double cap = params.velocity_cap[i] * dt_s;
      const double delta = std::clamp((targets[i] - q) * alpha, -cap, cap);
      next.joints[i] =
          std::clamp(q + delta, params.position_min[i], params.position_max[i]);
    }
  }

  for (std::size_t g = 0; g < next.grippers.size() &&
                          g < cmd.gripper_targets.size(); ++g) {
    if (cmd.gripper_targets[g]) {
      next.grippers[g] = std::clamp(*cmd.gripper_targets[g], 0.0, 1.0);
    }
  }

  // Midpoint heading keeps the integration second order in dt.
  const VelocityCommand& v = cmd.velocity;
  const double heading = state.base.heading + 0.5 * v.wz * dt_s;
  next.base.x += (v.vx * std::cos(heading) - v.vy * std::sin(heading)) * dt_s;
  next.base.y += (v.vx * std::sin(heading) + v.vy * std::cos(heading)) * dt_s;
  next.base.heading = WrapAngle(state.base.heading + v.wz * dt_s);

  if (cmd.base_orientation) next.base_orientation = *cmd.base_orientation;
  return next;
}

}  // namespace child
