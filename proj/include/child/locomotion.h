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

#ifndef CHILD_LOCOMOTION_H_
#define CHILD_LOCOMOTION_H_

// Leg-as-joystick locomotion: hip roll, pitch and yaw deflections from a
// captured neutral pose become lateral, forward and yaw-rate commands for
// the walking controller.

#include <cstdint>

#include "child/config.h"
#include "child/frame_codec.h"

namespace child {

struct HipAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  bool operator==(const HipAngles&) const = default;
};

struct JoystickCalibration {
  double deadband = 0.05;
  double roll_gain = 1.0;
  double pitch_gain = 1.0;
  double yaw_gain = 1.0;
  double vx_max = 0.6;
  double vy_max = 0.4;
  double wz_max = 1.0;
  HipAngles neutral;

  static JoystickCalibration FromSpec(const LocomotionSpec& spec,
                                      HipAngles neutral = {});
};

// Body-frame planar velocity: vx forward, vy left, wz counter-clockwise.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;
  std::int64_t stamp_ns = 0;

  bool IsZero() const { return vx == 0.0 && vy == 0.0 && wz == 0.0; }
  bool operator==(const VelocityCommand&) const = default;
};

// One axis of the piecewise-linear deadband map, saturated at +-max.
double DeadbandAxis(double error, double deadband, double gain, double max);

// Exactly zero when not engaged.
VelocityCommand HipToVelocity(const HipAngles& hips,
                              const JoystickCalibration& cal, bool engaged,
                              std::int64_t stamp_ns = 0);

// Hip angles of the leader leg on `side`. Throws Error if that side has no
// leg or the frame does not match the leader schema.
HipAngles CaptureNeutral(const StateFrame& frame, const TeleopPlan& plan,
                         Side side);

}  // namespace child

#endif  // CHILD_LOCOMOTION_H_
