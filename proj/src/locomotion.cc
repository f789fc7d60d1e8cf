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

#include "child/locomotion.h"

#include <algorithm>
#include <cmath>

#include "child/error.h"

namespace child {

JoystickCalibration JoystickCalibration::FromSpec(const LocomotionSpec& spec,
                                                  HipAngles neutral) {
  JoystickCalibration cal;
  cal.deadband = spec.deadband;
  cal.roll_gain = spec.roll_gain;
  cal.pitch_gain = spec.pitch_gain;
  cal.yaw_gain = spec.yaw_gain;
  cal.vx_max = spec.vx_max;
  cal.vy_max = spec.vy_max;
  cal.wz_max = spec.wz_max;
  cal.neutral = neutral;
  return cal;
}

double DeadbandAxis(double error, double deadband, double gain, double max) {
  if (std::abs(error) <= deadband) return 0.0;
  const double shifted = error - std::copysign(deadband, error);
  return std::clamp(gain * shifted, -max, max);
}

VelocityCommand HipToVelocity(const HipAngles& hips,
                              const JoystickCalibration& cal, bool engaged,
                              std::int64_t stamp_ns) {
  VelocityCommand cmd;
  cmd.stamp_ns = stamp_ns;
  if (!engaged) return cmd;
  cmd.vy = DeadbandAxis(hips.roll - cal.neutral.roll, cal.deadband,
                        cal.roll_gain, cal.vy_max);
  cmd.vx = DeadbandAxis(hips.pitch - cal.neutral.pitch, cal.deadband,
                        cal.pitch_gain, cal.vx_max);
  cmd.wz = DeadbandAxis(hips.yaw - cal.neutral.yaw, cal.deadband,
                        cal.yaw_gain, cal.wz_max);
  return cmd;
}

HipAngles CaptureNeutral(const StateFrame& frame, const TeleopPlan& plan,
                         Side side) {
  if (side == Side::kCenter || !plan.side(side).hip) {
    throw Error("locomotion", "no leader leg on the " +
                                  std::string(ToString(side)) + " side");
  }
  if (frame.joint_positions.size() != plan.leader_joints.size()) {
    throw SchemaMismatch("locomotion", "frame does not match leader schema");
  }
  const auto& hip = *plan.side(side).hip;
  return {frame.joint_positions[hip[0]], frame.joint_positions[hip[1]],
          frame.joint_positions[hip[2]]};
}

}  // namespace child
