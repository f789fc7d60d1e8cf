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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "child/follower_sim.h"
#include "child/session.h"
#include "test_support.h"

namespace child {
namespace {

constexpr double kDt = 0.01;

// Runs the session against the simulated follower one tick at a time.
class Driver {
 public:
  explicit Driver(TeleopPlan plan)
      : plan_(std::move(plan)),
        state_(InitialSessionState(plan_)),
        follower_(InitialFollowerState(plan_.follower)),
        tracking_(TrackingParams::FromConfig(plan_.follower)) {}

  StepResult Tick(const StateFrame& frame, double dt = kDt, bool stale = false) {
    StepResult r = Step(state_, {&frame, stale}, follower_, dt, plan_);
    follower_ = StepFollower(follower_, r.commands, std::min(dt, 0.1), tracking_);
    state_ = r.state;
    for (const GestureEvent& e : r.events) events_.push_back(e);
    return r;
  }
  StepResult TickNoFrame(double dt = kDt) {
    StepResult r = Step(state_, {nullptr, false}, follower_, dt, plan_);
    state_ = r.state;
    return r;
  }

  // Holds `frame` for n ticks.
  StepResult Hold(const StateFrame& frame, int n) {
    StepResult r;
    for (int i = 0; i < n; ++i) r = Tick(frame);
    return r;
  }

  StateFrame Frame(float left, float right) const {
    StateFrame f = testing::HomeFrame(plan_);
    f.gripper_triggers = {left, right};
    return f;
  }

  // Activation gesture, then open grippers until Active.
  void Activate() {
    Hold(Frame(1, 1), 300);
    ASSERT_TRUE(state_.phase == Phase::kSynchronizing || state_.phase == Phase::kActive);
    for (int i = 0; i < 2000 && state_.phase != Phase::kActive; ++i) Tick(Frame(0, 0));
    ASSERT_EQ(state_.phase, Phase::kActive);
    Tick(Frame(0, 0));  // clears the activation latch
  }

  const TeleopPlan& plan() const { return plan_; }
  const SessionState& state() const { return state_; }
  const FollowerState& follower() const { return follower_; }
  const std::vector<GestureEvent>& events() const { return events_; }

 private:
  TeleopPlan plan_;
  SessionState state_;
  FollowerState follower_;
  TrackingParams tracking_;
  std::vector<GestureEvent> events_;
};

std::size_t Count(const std::vector<GestureEvent>& events, GestureKind kind) {
  return std::count_if(events.begin(), events.end(),
                       [kind](const GestureEvent& e) { return e.kind == kind; });
}

// ------------------------------ activation -----------------------------------

TEST(SessionActivationTest, HoldShortOfThreeSecondsThenReleaseResets) {
  Driver d(testing::G1Plan());
  d.Hold(d.Frame(1, 1), 290);
  EXPECT_EQ(d.state().phase, Phase::kArming);
  EXPECT_NEAR(d.state().arming_s(), 2.9, 1e-9);
  d.Tick(d.Frame(1, 0));
  EXPECT_EQ(d.state().phase, Phase::kIdle);
  EXPECT_EQ(d.state().arming_ns, 0);
  EXPECT_TRUE(d.events().empty());
}

TEST(SessionActivationTest, ThreeSecondsContinuousActivates) {
  Driver d(testing::G1Plan());
  StateFrame reach = d.Frame(1, 1);
  reach.joint_positions[d.plan().side(Side::kLeft).leader_arm_joints[0]] += 0.4f;
  StepResult r = d.Hold(reach, 299);
  EXPECT_EQ(d.state().phase, Phase::kArming);
  r = d.Tick(reach);
  EXPECT_EQ(d.state().phase, Phase::kSynchronizing);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, GestureKind::kSessionActivated);
  EXPECT_EQ(r.events[0].stamp_ns, 3'000'000'000);
  EXPECT_EQ(r.events[0].ToLogLine(), "3000000000 SessionActivated -");
}

TEST(SessionActivationTest, OneGripperIsNotEnough) {
  Driver d(testing::G1Plan());
  d.Hold(d.Frame(1, 0), 500);
  EXPECT_EQ(d.state().phase, Phase::kIdle);
}

TEST(SessionActivationTest, HysteresisKeepsAHoldAliveAboveReleaseThreshold) {
  Driver d(testing::G1Plan());
  d.Hold(d.Frame(1, 1), 100);
  d.Hold(d.Frame(0.7f, 0.7f), 100);  // between release and close thresholds
  EXPECT_NEAR(d.state().arming_s(), 2.0, 1e-9);
  d.Tick(d.Frame(0.59f, 1));
  EXPECT_EQ(d.state().arming_ns, 0);
  // Re-arming needs the close threshold again.
  d.Hold(d.Frame(0.7f, 0.7f), 10);
  EXPECT_EQ(d.state().arming_ns, 0);
}

TEST(SessionActivationTest, SynchronizationStartsFromTheFollowerPose) {
  Driver d(testing::G1Plan());
  StateFrame reach = d.Frame(1, 1);
  reach.joint_positions[d.plan().side(Side::kLeft).leader_arm_joints[0]] += 0.4f;
  d.Hold(reach, 299);
  const std::vector<double> before = d.follower().joints;
  const StepResult r = d.Tick(reach);
  EXPECT_EQ(d.state().phase, Phase::kSynchronizing);
  ASSERT_TRUE(r.commands.joint_targets.has_value());
  const auto& targets = *r.commands.joint_targets;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double cap = 0.25 * d.plan().follower_joints[i].velocity_max * kDt;
    EXPECT_LE(std::abs(targets[i] - before[i]), cap + 1e-12);
  }
}

// ------------------------------ idle safety ----------------------------------

TEST(SessionIdleTest, NoCommandsBeforeActivationForRandomInput) {
  std::mt19937_64 rng(3);
  const TeleopPlan plan = testing::G1Plan();
  for (int run = 0; run < 20; ++run) {
    Driver d(plan);
    for (int k = 0; k < 400; ++k) {
      StateFrame f = testing::RandomFrame(rng, plan.leader_joints.size(), 2);
      f.gripper_triggers[rng() % 2] = 0.0f;  // never both closed
      const StepResult r = d.Tick(f);
      ASSERT_FALSE(r.commands.joint_targets.has_value());
      ASSERT_TRUE(r.commands.velocity.IsZero());
      ASSERT_TRUE(std::none_of(r.commands.gripper_targets.begin(),
                               r.commands.gripper_targets.end(),
                               [](const auto& g) { return g.has_value(); }));
      ASSERT_EQ(d.state().phase, Phase::kIdle);
    }
  }
}

// --------------------------- synchronization ---------------------------------

TEST(SessionSyncTest, CommandDeltasAreRateLimited) {
  Driver d(testing::G1Plan("g1_follower_full_body.yaml"));
  StateFrame far = d.Frame(1, 1);
  for (std::size_t i = 0; i < far.joint_positions.size(); ++i) {
    const JointSpec& j = d.plan().leader_joints[i];
    far.joint_positions[i] = static_cast<float>(j.Clamp(j.home_position + 0.6));
  }
  d.Hold(far, 299);
  std::vector<double> previous = d.follower().joints;
  StepResult r = d.Tick(far);
  ASSERT_EQ(d.state().phase, Phase::kSynchronizing);
  int ticks = 0;
  double last_progress = 0.0;
  while (d.state().phase == Phase::kSynchronizing && ticks < 5000) {
    const auto& cmd = *r.commands.joint_targets;
    for (std::size_t i = 0; i < cmd.size(); ++i) {
      const double cap = 0.25 * d.plan().follower_joints[i].velocity_max * kDt;
      ASSERT_LE(std::abs(cmd[i] - previous[i]), cap + 1e-12);
    }
    ASSERT_GE(d.state().sync_progress, last_progress);
    last_progress = d.state().sync_progress;
    previous = cmd;
    r = d.Tick(far);
    ++ticks;
  }
  EXPECT_EQ(d.state().phase, Phase::kActive);
  EXPECT_EQ(d.state().sync_progress, 1.0);
  EXPECT_GT(ticks, 10);
  EXPECT_EQ(Count(d.events(), GestureKind::kSyncComplete), 1u);
}

TEST(SyncTrajectoryTest, Examples) {
  const std::vector<double> a{0.3, -0.2}, v{1.0, 1.0};
  EXPECT_EQ(SyncTrajectory(a, a, v, 0.1), a);
  const std::vector<double> from{0.0}, to{1.0}, lim{0.5};
  EXPECT_NEAR(SyncTrajectory(from, to, lim, 0.1)[0], 0.05, 1e-15);
  EXPECT_THROW(SyncTrajectory(from, a, lim, 0.1), SchemaMismatch);
}

TEST(SyncTrajectoryTest, MatchesCumulativeIntegration) {
  // A saturated rate limiter moves at exactly v until it lands.
  std::vector<double> q{0.0};
  const std::vector<double> to{1.0}, lim{0.5};
  for (int k = 1; k <= 25; ++k) {
    q = SyncTrajectory(q, to, lim, 0.1);
    EXPECT_NEAR(q[0], std::min(1.0, 0.05 * k), 1e-12);
  }
}

TEST(SyncTrajectoryTest, ConvergesWithinTheRateLimiterBound) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0), vel(0.1, 3.0);
  const double epsilon = 0.02, dt = 0.01;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> from(n), to(n), lim(n);
    for (std::size_t i = 0; i < n; ++i) {
      from[i] = u(rng);
      to[i] = u(rng);
      lim[i] = vel(rng);
    }
    auto max_err = [&](const std::vector<double>& q) {
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i) e = std::max(e, std::abs(q[i] - to[i]));
      return e;
    };
    const double initial = max_err(from);
    const double min_vel = *std::min_element(lim.begin(), lim.end());
    const double bound = initial / (min_vel * dt) + 1;
    int steps = 0;
    double previous = initial;
    while (max_err(from) >= epsilon) {
      from = SyncTrajectory(from, to, lim, dt);
      ASSERT_LE(max_err(from), previous);
      previous = max_err(from);
      ++steps;
      ASSERT_LE(steps, bound);
    }
  }
}

// ----------------------------- mode switching --------------------------------

TEST(SessionToggleTest, LeftHeldOneSecondEngagesLeftJoystick) {
  Driver d(testing::G1Plan());
  d.Activate();
  d.Hold(d.Frame(1, 0), 99);
  EXPECT_FALSE(d.state().left_leg_joystick);
  const StepResult r = d.Tick(d.Frame(1, 0));
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, GestureKind::kJoystickEngaged);
  EXPECT_EQ(r.events[0].side, Side::kLeft);
  EXPECT_TRUE(d.state().left_leg_joystick);
  EXPECT_FALSE(d.state().left_arm_active);
  EXPECT_TRUE(d.state().right_arm_active);
}

TEST(SessionToggleTest, ActivationGripsMustBeReleasedFirst) {
  Driver d(testing::G1Plan());
  d.Hold(d.Frame(1, 1), 300);
  // Keep holding through synchronization: no toggle may fire.
  for (int i = 0; i < 2000 && d.state().phase != Phase::kActive; ++i) d.Tick(d.Frame(1, 1));
  ASSERT_EQ(d.state().phase, Phase::kActive);
  d.Hold(d.Frame(1, 1), 300);
  EXPECT_FALSE(d.state().left_leg_joystick);
  EXPECT_FALSE(d.state().right_leg_joystick);
}

TEST(SessionToggleTest, SameTickTieGoesLeft) {
  Driver d(testing::G1Plan());
  d.Activate();
  d.Hold(d.Frame(1, 1), 100);
  EXPECT_TRUE(d.state().left_leg_joystick);
  EXPECT_FALSE(d.state().right_leg_joystick);
  EXPECT_TRUE(d.state().right_arm_active);
  // The losing side's hold was consumed.
  d.Hold(d.Frame(1, 1), 200);
  EXPECT_FALSE(d.state().right_leg_joystick);
}

TEST(SessionToggleTest, LongerHoldWinsWhenBothCrossTogether) {
  Driver d(testing::G1Plan());
  d.Activate();
  d.Tick(d.Frame(0, 1));     // right starts one tick earlier
  d.Hold(d.Frame(1, 1), 94);  // right 0.95 s, left 0.94 s
  EXPECT_FALSE(d.state().right_leg_joystick);
  const StepResult r = d.Tick(d.Frame(1, 1), 0.1);  // both pass 1.0 s
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].side, Side::kRight);
  EXPECT_TRUE(d.state().right_leg_joystick);
  EXPECT_FALSE(d.state().left_leg_joystick);
}

TEST(SessionToggleTest, SecondHoldReleasesAndRestoresTheArm) {
  Driver d(testing::G1Plan());
  d.Activate();
  StateFrame grip = d.Frame(1, 0);
  const auto& arm = d.plan().side(Side::kLeft).leader_arm_joints;
  grip.joint_positions[arm[0]] += 0.3f;
  d.Hold(grip, 100);
  ASSERT_TRUE(d.state().left_leg_joystick);
  EXPECT_NEAR(d.state().spring_base[arm[0]], grip.joint_positions[arm[0]], 1e-7);
  d.Hold(d.Frame(1, 0), 150);  // still latched: no release
  EXPECT_TRUE(d.state().left_leg_joystick);
  d.Tick(d.Frame(0, 0));
  const StepResult r = d.Hold(d.Frame(1, 0), 100);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, GestureKind::kJoystickReleased);
  EXPECT_FALSE(d.state().left_leg_joystick);
  EXPECT_TRUE(d.state().left_arm_active);
  EXPECT_EQ(d.state().spring_base[arm[0]], d.plan().leader_joints[arm[0]].home_position);
}

TEST(SessionToggleTest, DirectJointNeverEngagesAJoystick) {
  std::mt19937_64 rng(12);
  Driver d(testing::G1Plan("g1_follower_full_body.yaml"));
  d.Activate();
  for (int k = 0; k < 3000; ++k) {
    StateFrame f = d.Frame(0, 0);
    const int pattern = (k / 150) % 4;
    f.gripper_triggers = {pattern & 1 ? 1.0f : 0.0f, pattern & 2 ? 1.0f : 0.0f};
    const StepResult r = d.Tick(f);
    ASSERT_FALSE(d.state().left_leg_joystick);
    ASSERT_FALSE(d.state().right_leg_joystick);
    ASSERT_TRUE(r.commands.velocity.IsZero());
  }
  EXPECT_EQ(Count(d.events(), GestureKind::kJoystickEngaged), 0u);
  (void)rng;
}

TEST(SessionActiveTest, DeactivatedArmHoldsWhileOtherArmTracks) {
  Driver d(testing::G1Plan());
  d.Activate();
  d.Hold(d.Frame(1, 0), 100);
  ASSERT_FALSE(d.state().left_arm_active);
  const TeleopPlan& plan = d.plan();
  const std::vector<double> held = d.state().last_command;
  StateFrame moved = d.Frame(0, 0);
  for (std::size_t i = 0; i < moved.joint_positions.size(); ++i) {
    const JointSpec& j = plan.leader_joints[i];
    moved.joint_positions[i] = static_cast<float>(j.Clamp(j.home_position + 0.2));
  }
  const StepResult r = d.Tick(moved);
  for (std::size_t idx : plan.side(Side::kLeft).follower_from_arm) {
    EXPECT_EQ((*r.commands.joint_targets)[idx], held[idx]);
  }
  int changed = 0;
  for (std::size_t idx : plan.side(Side::kRight).follower_from_arm) {
    changed += (*r.commands.joint_targets)[idx] != held[idx];
  }
  EXPECT_GT(changed, 0);
  // Left follower gripper ignores the deactivated side's trigger.
  StateFrame squeeze = moved;
  squeeze.gripper_triggers = {0.3f, 0.0f};
  const StepResult g = d.Tick(squeeze);
  EXPECT_NE(g.commands.gripper_targets[0], std::optional<double>(0.3f));
}

TEST(SessionActiveTest, EngagedHipPitchDrivesForward) {
  Driver d(testing::G1Plan());
  d.Activate();
  d.Hold(d.Frame(1, 0), 100);
  ASSERT_TRUE(d.state().left_leg_joystick);
  StateFrame lean = d.Frame(0, 0);
  const auto& hip = *d.plan().side(Side::kLeft).hip;
  lean.joint_positions[hip[1]] += 0.3f;
  const StepResult r = d.Tick(lean);
  EXPECT_GT(r.commands.velocity.vx, 0.0);
  EXPECT_EQ(r.commands.velocity.vy, 0.0);
  // The other leg does nothing.
  StateFrame other = d.Frame(0, 0);
  other.joint_positions[(*d.plan().side(Side::kRight).hip)[1]] += 0.3f;
  EXPECT_TRUE(d.Tick(other).commands.velocity.IsZero());
}

TEST(SessionActiveTest, ImuDrivesTorsoInActive) {
  Driver d(testing::G1Plan());
  d.Activate();
  StateFrame tilt = d.Frame(0, 0);
  tilt.orientation = EulerToQuat({0.0, 0.2, 0.0}).ToFrame();
  const StepResult r = d.Tick(tilt);
  EXPECT_NEAR((*r.commands.joint_targets)[(*d.plan().torso)[2]], 0.2, 1e-6);
}

// ------------------------------ degraded link --------------------------------

TEST(SessionLinkTest, StaleLinkHoldsAndFreezesTimers) {
  Driver d(testing::G1Plan());
  d.Hold(d.Frame(1, 1), 150);
  const std::int64_t arming = d.state().arming_ns;
  for (int i = 0; i < 50; ++i) {
    const StepResult r = d.Tick(d.Frame(1, 1), kDt, /*stale=*/true);
    EXPECT_TRUE(r.commands.hold);
    EXPECT_FALSE(r.commands.joint_targets.has_value());
  }
  EXPECT_EQ(d.state().arming_ns, arming);
  EXPECT_EQ(d.state().stale_ticks, 50u);

  d.Hold(d.Frame(1, 1), 150);
  d.Activate();
  d.Hold(d.Frame(1, 0), 100);
  ASSERT_TRUE(d.state().left_leg_joystick);
  StateFrame lean = d.Frame(0, 0);
  lean.joint_positions[(*d.plan().side(Side::kLeft).hip)[1]] += 0.3f;
  ASSERT_FALSE(d.Tick(lean).commands.velocity.IsZero());
  const std::vector<double> last = d.state().last_command;
  const StepResult held = d.Tick(lean, kDt, /*stale=*/true);
  EXPECT_TRUE(held.commands.velocity.IsZero());
  EXPECT_EQ(*held.commands.joint_targets, last);
  EXPECT_TRUE(d.TickNoFrame().commands.hold);
}

TEST(SessionLinkTest, MalformedFramesAreCountedAndHeld) {
  Driver d(testing::G1Plan());
  d.Activate();
  StateFrame bad = d.Frame(0, 0);
  bad.joint_positions.pop_back();
  StepResult r = d.Tick(bad);
  EXPECT_TRUE(r.commands.hold);
  bad = d.Frame(0, 0);
  bad.gripper_triggers[0] = 7.0f;
  r = d.Tick(bad);
  bad = d.Frame(0, 0);
  bad.orientation = {2.0f, 0.0f, 0.0f, 0.0f};
  r = d.Tick(bad);
  EXPECT_EQ(d.state().malformed_frames, 3u);
  EXPECT_EQ(d.state().phase, Phase::kActive);
  EXPECT_EQ(*r.commands.joint_targets, d.state().last_command);
}

TEST(SessionStepTest, NonPositiveDtThrows) {
  const TeleopPlan plan = testing::G1Plan();
  const StateFrame f = testing::HomeFrame(plan);
  EXPECT_THROW(Step(InitialSessionState(plan), {&f, false},
                    InitialFollowerState(plan.follower), 0.0, plan),
               Error);
}

// ------------------------------ properties -----------------------------------

// Piecewise-held random triggers so gestures actually complete.
std::vector<StateFrame> RandomSession(const TeleopPlan& plan, std::uint64_t seed, int ticks) {
  std::mt19937_64 rng(seed);
  std::vector<StateFrame> frames;
  StateFrame f = testing::HomeFrame(plan);
  int next_change = 0;
  for (int k = 0; k < ticks; ++k) {
    if (k == next_change) {
      for (float& t : f.gripper_triggers) {
        t = std::uniform_real_distribution<float>(0.0f, 1.0f)(rng) < 0.6f ? 1.0f : 0.3f;
      }
      next_change += std::uniform_int_distribution<int>(20, 400)(rng);
    }
    for (std::size_t i = 0; i < f.joint_positions.size(); ++i) {
      const JointSpec& j = plan.leader_joints[i];
      const double q = f.joint_positions[i] + std::normal_distribution<double>(0, 0.02)(rng);
      f.joint_positions[i] = static_cast<float>(j.Clamp(q));
    }
    frames.push_back(f);
  }
  return frames;
}

TEST(SessionPropertyTest, StateInvariantsHoldAfterEveryStep) {
  for (const char* follower : {"g1_follower_loco.yaml", "g1_follower_full_body.yaml"}) {
    const TeleopPlan plan = testing::G1Plan(follower);
    const bool joystick = plan.mapping.leg_mode == LegMode::kJoystick;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      Driver d(plan);
      std::mt19937_64 rng(seed * 977);
      for (const StateFrame& f : RandomSession(plan, seed, 3000)) {
        const bool stale = rng() % 50 == 0;
        const StepResult r = d.Tick(f, kDt, stale);
        const SessionState& s = d.state();
        for (Side side : {Side::kLeft, Side::kRight}) {
          if (s.leg_joystick(side)) {
            ASSERT_EQ(s.phase, Phase::kActive);
            ASSERT_FALSE(s.arm_active(side));
          }
        }
        ASSERT_FALSE(s.left_leg_joystick && s.right_leg_joystick);
        if (!joystick) ASSERT_FALSE(s.left_leg_joystick || s.right_leg_joystick);
        if (s.phase == Phase::kIdle || s.phase == Phase::kArming) {
          ASSERT_FALSE(r.commands.joint_targets.has_value());
        }
        if (stale || !(s.left_leg_joystick || s.right_leg_joystick)) {
          ASSERT_TRUE(r.commands.velocity.IsZero());
        }
        for (std::size_t g = 0; g < s.gripper_closed.size(); ++g) {
          if (!stale && f.gripper_triggers[g] < plan.follower.session.release_threshold) {
            ASSERT_EQ(s.hold_ns[g], 0);
          }
        }
        ASSERT_EQ(r.commands.feedback_torques.size(), plan.leader_joints.size());
      }
    }
  }
}

TEST(SessionPropertyTest, RandomSessionsReachEveryPhase) {
  const TeleopPlan plan = testing::G1Plan();
  Driver d(plan);
  for (const StateFrame& f : RandomSession(plan, 4, 6000)) d.Tick(f);
  EXPECT_GE(Count(d.events(), GestureKind::kSessionActivated), 1u);
  EXPECT_GE(Count(d.events(), GestureKind::kJoystickEngaged), 1u);
}

TEST(SessionPropertyTest, IdenticalInputsGiveIdenticalOutputs) {
  const TeleopPlan plan = testing::G1Plan();
  const std::vector<StateFrame> frames = RandomSession(plan, 5, 3000);
  Driver a(plan), b(plan);
  for (const StateFrame& f : frames) {
    const StepResult ra = a.Tick(f);
    const StepResult rb = b.Tick(f);
    ASSERT_EQ(ra.commands.joint_targets, rb.commands.joint_targets);
    ASSERT_EQ(ra.commands.velocity, rb.commands.velocity);
    ASSERT_EQ(ra.commands.feedback_torques, rb.commands.feedback_torques);
    ASSERT_EQ(ra.events, rb.events);
  }
  EXPECT_EQ(a.follower().joints, b.follower().joints);
}

}  // namespace
}  // namespace child
