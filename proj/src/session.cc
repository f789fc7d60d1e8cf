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

#include "child/session.h"

#include <algorithm>
#include <cmath>

#include "child/error.h"
#include "child/feedback.h"
#include "child/retarget.h"

namespace child {
namespace {

std::int64_t SecondsToNs(double s) {
  return static_cast<std::int64_t>(std::llround(s * 1e9));
}

std::size_t SideIndex(Side side) { return static_cast<std::size_t>(side); }

void UpdateGrippers(SessionState& s, const StateFrame& frame,
                    const SessionParams& params) {
  for (std::size_t i = 0; i < frame.gripper_triggers.size(); ++i) {
    const double t = frame.gripper_triggers[i];
    s.gripper_closed[i] = s.gripper_closed[i] ? t >= params.release_threshold
                                              : t >= params.close_threshold;
  }
}

std::vector<double> ToDouble(const std::vector<float>& values) {
  return {values.begin(), values.end()};
}

void EngageJoystick(SessionState& s, const StateFrame& frame,
                    const TeleopPlan& plan, Side side,
                    std::vector<GestureEvent>& events) {
  const auto& binding = plan.side(side);
  s.neutral[SideIndex(side)] = CaptureNeutral(frame, plan, side);
  // Freeze the arm's spring base at its pose on deactivation.
  for (std::size_t idx : binding.leader_arm_joints) {
    s.spring_base[idx] =
        plan.leader_joints[idx].Clamp(frame.joint_positions[idx]);
  }
  if (side == Side::kLeft) {
    s.left_leg_joystick = true;
    s.left_arm_active = false;
  } else {
    s.right_leg_joystick = true;
    s.right_arm_active = false;
  }
  events.push_back({GestureKind::kJoystickEngaged, side, s.time_ns});
}

void ReleaseJoystick(SessionState& s, const TeleopPlan& plan, Side side,
                     std::vector<GestureEvent>& events) {
  if (plan.leader.gains.revert_base_on_release) {
    for (std::size_t idx : plan.side(side).leader_arm_joints) {
      s.spring_base[idx] = plan.leader_joints[idx].home_position;
    }
  }
  if (side == Side::kLeft) {
    s.left_leg_joystick = false;
    s.left_arm_active = true;
  } else {
    s.right_leg_joystick = false;
    s.right_arm_active = true;
  }
  events.push_back({GestureKind::kJoystickReleased, side, s.time_ns});
}

// Single-gripper hold gestures in Active. At most one side toggles per tick:
// the side held longer wins, ties go to the left. The loser's hold is
// cancelled and needs a release before it counts again.
void ProcessToggles(SessionState& s, const StateFrame& frame,
                    const TeleopPlan& plan, std::int64_t dt_ns,
                    std::vector<GestureEvent>& events) {
  const std::int64_t toggle_ns = SecondsToNs(plan.follower.session.toggle_hold_s);
  std::array<bool, 2> ready{false, false};
  for (Side side : {Side::kLeft, Side::kRight}) {
    const auto gripper = plan.side(side).leader_gripper;
    if (!gripper) continue;
    const std::size_t g = *gripper;
    if (s.gripper_closed[g]) {
      if (!s.gripper_latched[g]) s.hold_ns[g] += dt_ns;
    } else {
      s.hold_ns[g] = 0;
      s.gripper_latched[g] = false;
    }
    ready[SideIndex(side)] = !s.gripper_latched[g] && s.hold_ns[g] >= toggle_ns;
  }
  if (!ready[0] && !ready[1]) return;

  Side winner = ready[0] ? Side::kLeft : Side::kRight;
  if (ready[0] && ready[1]) {
    const std::size_t gl = *plan.side(Side::kLeft).leader_gripper;
    const std::size_t gr = *plan.side(Side::kRight).leader_gripper;
    winner = s.hold_ns[gr] > s.hold_ns[gl] ? Side::kRight : Side::kLeft;
  }
  for (Side side : {Side::kLeft, Side::kRight}) {
    if (!ready[SideIndex(side)]) continue;
    const std::size_t g = *plan.side(side).leader_gripper;
    s.hold_ns[g] = 0;
    s.gripper_latched[g] = true;
  }

  const Side other = winner == Side::kLeft ? Side::kRight : Side::kLeft;
  if (s.leg_joystick(winner)) {
    ReleaseJoystick(s, plan, winner, events);
  } else if (!s.leg_joystick(other) && plan.side(winner).hip) {
    EngageJoystick(s, frame, plan, winner, events);
  }
}

void ComputeFeedback(const SessionState& s, const StateFrame& frame,
                     const TeleopPlan& plan, CommandSet& commands) {
  SpringParams params = DefaultSpringParams(plan.leader);
  params.q_base = s.spring_base;
  std::vector<FeedbackPhase> limb_phase;
  for (const LimbSpec& limb : plan.leader.limbs) {
    limb_phase.push_back(PhaseOf(s, plan, limb.name));
  }
  std::vector<FeedbackPhase> phases;
  phases.reserve(plan.leader_joints.size());
  for (std::size_t limb : plan.leader_limb_of_joint) {
    phases.push_back(limb_phase[limb]);
  }
  commands.feedback_torques = BiasTorque(ToDouble(frame.joint_positions),
                                         params, phases, plan.leader.gains);
}

}  // namespace

std::string_view ToString(Phase phase) {
  switch (phase) {
    case Phase::kIdle: return "Idle";
    case Phase::kArming: return "Arming";
    case Phase::kSynchronizing: return "Synchronizing";
    case Phase::kActive: return "Active";
  }
  return "?";
}

std::string_view ToString(GestureKind kind) {
  switch (kind) {
    case GestureKind::kSessionActivated: return "SessionActivated";
    case GestureKind::kSyncComplete: return "SyncComplete";
    case GestureKind::kJoystickEngaged: return "JoystickEngaged";
    case GestureKind::kJoystickReleased: return "JoystickReleased";
  }
  return "?";
}

std::string GestureEvent::ToLogLine() const {
  return std::to_string(stamp_ns) + " " + std::string(ToString(kind)) + " " +
         (side ? std::string(child::ToString(*side)) : std::string("-"));
}

SessionState InitialSessionState(const TeleopPlan& plan) {
  SessionState s;
  const std::size_t grippers = plan.leader.GripperLimbs().size();
  s.hold_ns.assign(grippers, 0);
  s.gripper_closed.assign(grippers, false);
  s.gripper_latched.assign(grippers, false);
  s.last_gripper_command.assign(plan.follower.GripperLimbs().size(),
                                std::nullopt);
  for (const JointSpec& joint : plan.leader_joints) {
    s.spring_base.push_back(joint.home_position);
  }
  return s;
}

std::vector<double> SyncTrajectory(std::span<const double> from,
                                   std::span<const double> to,
                                   std::span<const double> vel_limits,
                                   double dt_s) {
  if (from.size() != to.size() || from.size() != vel_limits.size()) {
    throw SchemaMismatch("session", "sync vectors differ in length");
  }
  std::vector<double> out(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    const double step = vel_limits[i] * dt_s;
    out[i] = from[i] + std::clamp(to[i] - from[i], -step, step);
  }
  return out;
}

StepResult Step(const SessionState& state, const LeaderInput& input,
                const FollowerState& follower, double dt_s,
                const TeleopPlan& plan) {
  if (!(dt_s > 0.0)) throw Error("session", "dt must be > 0");
  const SessionParams& params = plan.follower.session;
  const std::int64_t dt_ns = SecondsToNs(dt_s);
  const std::size_t n_leader = plan.leader_joints.size();
  const std::size_t n_grippers = state.gripper_closed.size();

  StepResult result{state, {}, {}};
  SessionState& s = result.state;
  CommandSet& c = result.commands;
  s.time_ns += dt_ns;
  c.velocity.stamp_ns = s.time_ns;
  c.gripper_targets.assign(s.last_gripper_command.size(), std::nullopt);
  c.feedback_torques.assign(n_leader, 0.0);

  // Stale link or unusable frame: hold the last command, zero velocity,
  // timers untouched.
  auto hold = [&]() {
    c.hold = true;
    if (s.phase == Phase::kSynchronizing || s.phase == Phase::kActive) {
      if (!s.last_command.empty()) c.joint_targets = s.last_command;
      c.gripper_targets = s.last_gripper_command;
      c.base_orientation = s.last_base_orientation;
    }
    return result;
  };
  if (!input.frame || input.stale) {
    ++s.stale_ticks;
    return hold();
  }
  const StateFrame& frame = *input.frame;
  if (frame.joint_positions.size() != n_leader ||
      frame.joint_velocities.size() != n_leader ||
      frame.gripper_triggers.size() != n_grippers ||
      !FrameInvariantViolation(frame).empty()) {
    ++s.malformed_frames;
    return hold();
  }

  UpdateGrippers(s, frame, params);

  if (s.phase == Phase::kIdle || s.phase == Phase::kArming) {
    const bool all_closed =
        n_grippers > 0 && std::all_of(s.gripper_closed.begin(),
                                      s.gripper_closed.end(),
                                      [](bool closed) { return closed; });
    if (all_closed) {
      s.arming_ns += dt_ns;
      s.phase = Phase::kArming;
      if (s.arming_ns >= SecondsToNs(params.activation_hold_s)) {
        s.phase = Phase::kSynchronizing;
        s.arming_ns = 0;
        s.sync_progress = 0.0;
        s.sync_initial_error = -1.0;
        s.last_command = follower.joints;
        result.events.push_back(
            {GestureKind::kSessionActivated, std::nullopt, s.time_ns});
      }
    } else {
      s.arming_ns = 0;
      s.phase = Phase::kIdle;
    }
  }

  if (s.phase == Phase::kSynchronizing) {
    const RetargetOutput target = MapJoints(frame, plan);
    std::vector<double> limits;
    limits.reserve(plan.follower_joints.size());
    for (const JointSpec& joint : plan.follower_joints) {
      limits.push_back(params.sync_velocity_fraction * joint.velocity_max);
    }
    if (s.sync_initial_error < 0.0) {
      s.sync_initial_error = 0.0;
      for (std::size_t i = 0; i < limits.size(); ++i) {
        s.sync_initial_error =
            std::max(s.sync_initial_error,
                     std::abs(s.last_command[i] - target.follower_targets[i]));
      }
    }
    std::vector<double> command =
        SyncTrajectory(s.last_command, target.follower_targets, limits, dt_s);
    double error = 0.0;
    for (std::size_t i = 0; i < command.size(); ++i) {
      error = std::max(error, std::abs(command[i] - target.follower_targets[i]));
    }
    s.sync_progress = s.sync_initial_error > 0.0
                          ? std::clamp(1.0 - error / s.sync_initial_error, 0.0, 1.0)
                          : 1.0;
    s.last_command = command;
    c.joint_targets = std::move(command);
    c.clamped_joints = target.clamped_joints;
    if (error < params.sync_epsilon) {
      s.phase = Phase::kActive;
      s.sync_progress = 1.0;
      // Grippers still closed from the activation gesture must be released
      // before they can start a mode-switch hold.
      for (std::size_t g = 0; g < n_grippers; ++g) {
        s.hold_ns[g] = 0;
        s.gripper_latched[g] = s.gripper_closed[g];
      }
      result.events.push_back(
          {GestureKind::kSyncComplete, std::nullopt, s.time_ns});
    }
  } else if (s.phase == Phase::kActive) {
    if (plan.mapping.leg_mode == LegMode::kJoystick) {
      ProcessToggles(s, frame, plan, dt_ns, result.events);
    }
    RetargetOutput target = MapJoints(frame, plan);
    std::vector<double>& targets = target.follower_targets;
    for (Side side : {Side::kLeft, Side::kRight}) {
      const auto& binding = plan.side(side);
      if (!s.arm_active(side)) {
        for (std::size_t idx : binding.follower_from_arm) {
          targets[idx] = s.last_command[idx];
        }
      }
      if (s.leg_joystick(side)) {
        for (std::size_t idx : binding.follower_from_leg) {
          targets[idx] = s.last_command[idx];
        }
      }
    }
    s.last_command = targets;
    c.joint_targets = targets;
    c.clamped_joints = std::move(target.clamped_joints);

    const auto follower_grippers = plan.follower.GripperLimbs();
    for (std::size_t g = 0; g < follower_grippers.size(); ++g) {
      const auto source = plan.follower_gripper_source[g];
      if (!source) continue;
      const Side side = follower_grippers[g]->side();
      if (side != Side::kCenter && !s.arm_active(side)) continue;
      s.last_gripper_command[g] = frame.gripper_triggers[*source];
    }
    c.gripper_targets = s.last_gripper_command;
    if (target.base_orientation) {
      s.last_base_orientation = target.base_orientation;
    }
    c.base_orientation = s.last_base_orientation;

    for (Side side : {Side::kLeft, Side::kRight}) {
      if (!s.leg_joystick(side)) continue;
      const JoystickCalibration cal = JoystickCalibration::FromSpec(
          plan.follower.locomotion, s.neutral[SideIndex(side)]);
      c.velocity = HipToVelocity(CaptureNeutral(frame, plan, side), cal,
                                 /*engaged=*/true, s.time_ns);
    }
  }

  ComputeFeedback(s, frame, plan, c);
  return result;
}

}  // namespace child
