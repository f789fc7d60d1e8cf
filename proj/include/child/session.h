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

#ifndef CHILD_SESSION_H_
#define CHILD_SESSION_H_

// Teleoperation session state machine.
//
//   Idle --(all grippers closed)--> Arming --(held activation_hold)-->
//   Synchronizing --(max command error < sync_epsilon)--> Active
//
// Releasing any gripper while Arming returns to Idle with the timer reset.
// In Active with leg_mode joystick, closing one arm's gripper for
// toggle_hold turns the leg on that side into a joystick and deactivates
// the arm; another hold of the same length hands the arm back.
//
// Step() is a pure function of its inputs, so identical input sequences
// produce identical outputs.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "child/config.h"
#include "child/follower_sim.h"
#include "child/frame_codec.h"
#include "child/locomotion.h"

namespace child {

enum class Phase { kIdle, kArming, kSynchronizing, kActive };
std::string_view ToString(Phase phase);

struct SessionState {
  Phase phase = Phase::kIdle;
  std::int64_t arming_ns = 0;
  double sync_progress = 0.0;  // 0..1
  bool left_leg_joystick = false;
  bool right_leg_joystick = false;
  bool left_arm_active = true;
  bool right_arm_active = true;

  // Per leader gripper (trigger order).
  std::vector<std::int64_t> hold_ns;
  std::vector<bool> gripper_closed;   // with hysteresis
  std::vector<bool> gripper_latched;  // must be released before counting

  // Follower joint order; empty until the first joint command.
  std::vector<double> last_command;
  std::vector<std::optional<double>> last_gripper_command;
  std::optional<Quaternion> last_base_orientation;
  // Spring base pose for force feedback, leader joint order.
  std::vector<double> spring_base;
  std::array<HipAngles, 2> neutral{};
  double sync_initial_error = -1.0;

  std::int64_t time_ns = 0;
  std::uint64_t malformed_frames = 0;
  std::uint64_t stale_ticks = 0;

  bool leg_joystick(Side side) const {
    return side == Side::kLeft ? left_leg_joystick : right_leg_joystick;
  }
  bool arm_active(Side side) const {
    return side == Side::kLeft ? left_arm_active : right_arm_active;
  }
  double arming_s() const { return static_cast<double>(arming_ns) / 1e9; }
};

SessionState InitialSessionState(const TeleopPlan& plan);

enum class GestureKind {
  kSessionActivated,
  kSyncComplete,
  kJoystickEngaged,
  kJoystickReleased,
};
std::string_view ToString(GestureKind kind);

struct GestureEvent {
  GestureKind kind;
  std::optional<Side> side;
  std::int64_t stamp_ns = 0;

  // "<stamp_ns> <kind> <side|->"
  std::string ToLogLine() const;
  bool operator==(const GestureEvent&) const = default;
};

struct LeaderInput {
  const StateFrame* frame = nullptr;  // null before the first frame
  bool stale = false;
};

struct StepResult {
  SessionState state;
  std::vector<GestureEvent> events;
  CommandSet commands;
};

// Throws Error if dt_s <= 0. Malformed frames are counted and treated like
// a stale link.
StepResult Step(const SessionState& state, const LeaderInput& input,
                const FollowerState& follower, double dt_s,
                const TeleopPlan& plan);

// Moves each joint toward its target by at most vel_limits[i] * dt_s.
// Throws SchemaMismatch when the spans differ in length.
std::vector<double> SyncTrajectory(std::span<const double> from,
                                   std::span<const double> to,
                                   std::span<const double> vel_limits,
                                   double dt_s);

}  // namespace child

#endif  // CHILD_SESSION_H_
