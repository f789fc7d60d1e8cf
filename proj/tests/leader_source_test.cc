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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <thread>

#include "child/follower_sim.h"
#include "child/leader_source.h"
#include "child/session.h"
#include "test_support.h"

namespace child {
namespace {

using ::testing::HasSubstr;

constexpr double kPi = std::numbers::pi;
constexpr std::int64_t kMs = 1'000'000;

class LeaderSourceTest : public ::testing::Test {
 protected:
  DeviceConfig leader_ = testing::LoadFixture("g1_leader.yaml");
  LeaderSchema schema_ = LeaderSchema::FromConfig(leader_);
  std::filesystem::path dir_ = testing::TempDir("leader_source");

  std::size_t Index(const std::string& name) const {
    for (std::size_t i = 0; i < schema_.joints.size(); ++i) {
      if (schema_.joints[i].name == name) return i;
    }
    ADD_FAILURE() << name;
    return 0;
  }
};

TEST_F(LeaderSourceTest, SchemaMirrorsTheConfig) {
  EXPECT_EQ(schema_.joints.size(), 22u);
  EXPECT_EQ(schema_.grippers, (std::vector<std::string>{"left_arm", "right_arm"}));
  EXPECT_EQ(schema_.JointNames()[0], leader_.FlatJoints()[0].name);
}

TEST_F(LeaderSourceTest, HoldEmitsConstantHomeFrames) {
  HoldSource source = HoldSource::AtHome(schema_);
  const StateFrame a = source.Sample(0);
  const StateFrame b = source.Sample(5'000 * kMs);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < schema_.joints.size(); ++i) {
    EXPECT_EQ(a.joint_positions[i], static_cast<float>(schema_.joints[i].home_position));
    EXPECT_EQ(a.joint_velocities[i], 0.0f);
  }
  EXPECT_EQ(a.gripper_triggers, std::vector<float>(2, 0.0f));
  EXPECT_TRUE(FrameInvariantViolation(a).empty());
  EXPECT_FALSE(source.Finished(1'000'000 * kMs));
}

TEST_F(LeaderSourceTest, HoldOutsideLimitsIsRejected) {
  std::vector<double> pose(schema_.joints.size(), 0.0);
  pose[0] = 100.0;
  EXPECT_THROW(HoldSource(schema_, pose), LimitViolation);
  EXPECT_THROW(HoldSource(schema_, {0.0}), SchemaMismatch);
}

TEST_F(LeaderSourceTest, SineFollowsTheFormulaWithAnalyticVelocity) {
  SineSweepSource source(schema_, 0.2, 0.5);
  for (std::int64_t t : {std::int64_t{0}, 130 * kMs, 777 * kMs}) {
    const StateFrame f = source.Sample(t);
    const double ts = t / 1e9;
    for (std::size_t i = 0; i < schema_.joints.size(); ++i) {
      EXPECT_NEAR(f.joint_positions[i],
                  schema_.joints[i].home_position + 0.2 * std::sin(2 * kPi * 0.5 * ts), 1e-6);
      EXPECT_NEAR(f.joint_velocities[i], 0.2 * 2 * kPi * 0.5 * std::cos(2 * kPi * 0.5 * ts),
                  1e-5);
    }
  }
}

TEST_F(LeaderSourceTest, SineBeyondLimitsIsLimitViolation) {
  EXPECT_THROW(SineSweepSource(schema_, 5.0, 0.5), LimitViolation);
}

TEST_F(LeaderSourceTest, GestureScriptStepsAndRamps) {
  ScriptStep close;
  close.at_s = 1.0;
  close.grippers = {{"left_arm", 1.0}};
  ScriptStep bend;
  bend.at_s = 2.0;
  bend.ramp_s = 1.0;
  bend.joints = {{"ch_left_elbow", 1.0}};
  GestureScriptSource source(schema_, {close, bend}, 4.0);
  const std::size_t elbow = Index("ch_left_elbow");
  const double home = schema_.joints[elbow].home_position;
  EXPECT_EQ(source.Sample(999 * kMs).gripper_triggers[0], 0.0f);
  EXPECT_EQ(source.Sample(1000 * kMs).gripper_triggers[0], 1.0f);
  EXPECT_EQ(source.Sample(1000 * kMs).gripper_triggers[1], 0.0f);
  EXPECT_NEAR(source.Sample(2500 * kMs).joint_positions[elbow], home + 0.5 * (1.0 - home), 1e-6);
  EXPECT_NEAR(source.Sample(3500 * kMs).joint_positions[elbow], 1.0, 1e-6);
  EXPECT_NEAR(source.Sample(2500 * kMs).joint_velocities[elbow], 1.0 - home, 1e-4);
  EXPECT_FALSE(source.Finished(3999 * kMs));
  EXPECT_TRUE(source.Finished(4000 * kMs));
}

TEST_F(LeaderSourceTest, GestureScriptValidatesNamesAndLimits) {
  ScriptStep bad_joint;
  bad_joint.joints = {{"no_such_joint", 0.0}};
  EXPECT_THROW(GestureScriptSource(schema_, {bad_joint}), Error);
  ScriptStep far;
  far.joints = {{"ch_left_elbow", 50.0}};
  EXPECT_THROW(GestureScriptSource(schema_, {far}), LimitViolation);
  ScriptStep trigger;
  trigger.grippers = {{"left_arm", 1.5}};
  EXPECT_THROW(GestureScriptSource(schema_, {trigger}), LimitViolation);
}

TEST_F(LeaderSourceTest, HoldingBothTriggersThreeSecondsStartsTheSession) {
  const TeleopPlan plan = testing::G1Plan();
  ScriptStep close;
  close.at_s = 0.5;
  close.grippers = {{"left_arm", 1.0}, {"right_arm", 1.0}};
  GestureScriptSource source(schema_, {close});
  SessionState state = InitialSessionState(plan);
  FollowerState follower = InitialFollowerState(plan.follower);
  const double dt = 0.01;
  std::optional<std::int64_t> activated;
  for (int k = 0; k < 400; ++k) {
    const std::int64_t t = k * 10 * kMs;
    StateFrame frame = source.Sample(t);
    frame.seq = k + 1;
    frame.stamp_ns = t;
    StepResult r = Step(state, {&frame, false}, follower, dt, plan);
    for (const GestureEvent& e : r.events) {
      if (e.kind == GestureKind::kSessionActivated) activated = e.stamp_ns;
    }
    state = r.state;
  }
  ASSERT_TRUE(activated.has_value());
  EXPECT_EQ(*activated, 3500 * kMs);
  EXPECT_NE(state.phase, Phase::kIdle);
}

TEST_F(LeaderSourceTest, RecordThenReplayIsIdentity) {
  SineSweepSource sine(schema_, 0.2, 0.5);
  const std::string path = (dir_ / "sine.chtrace").string();
  const Trace recorded = Record(sine, leader_, path, 100.0, 100);
  ASSERT_EQ(recorded.samples.size(), 100u);
  const Trace read = ReadTrace(path);
  EXPECT_EQ(read.header, recorded.header);
  EXPECT_EQ(read.header.fingerprint, ConfigFingerprint(leader_));
  ASSERT_EQ(read.samples.size(), 100u);
  EXPECT_EQ(read.samples, recorded.samples);
  ReplaySource replay(read, 1.0);
  for (std::size_t i = 0; i < 100; ++i) {
    const StateFrame f = replay.Sample(static_cast<std::int64_t>(i) * 10 * kMs);
    EXPECT_EQ(f.joint_positions, recorded.samples[i].positions) << i;
    EXPECT_EQ(f.gripper_triggers, recorded.samples[i].triggers);
  }
}

TEST_F(LeaderSourceTest, RecordRefusesMismatchedProviderBeforeCreatingTheFile) {
  const DeviceConfig other = testing::LoadFixture("dual_arm_leader.yaml");
  HoldSource wrong = HoldSource::AtHome(LeaderSchema::FromConfig(other));
  const auto path = dir_ / "mismatch.chtrace";
  EXPECT_THROW(Record(wrong, leader_, path.string(), 100.0, 10), SchemaMismatch);
  EXPECT_FALSE(std::filesystem::exists(path));
  EXPECT_THROW(RecordingSource(wrong, leader_, path.string(), 100.0), SchemaMismatch);
  EXPECT_FALSE(std::filesystem::exists(path));
}

TEST_F(LeaderSourceTest, ReadTraceErrors) {
  EXPECT_THROW(ReadTrace((dir_ / "missing.chtrace").string()), IoError);
  HoldSource hold = HoldSource::AtHome(schema_);
  const auto path = dir_ / "cut.chtrace";
  Record(hold, leader_, path.string(), 100.0, 3);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  try {
    ReadTrace(path.string());
    FAIL();
  } catch (const IoError& e) {
    EXPECT_THAT(e.what(), HasSubstr("whole number of frames"));
  }
}

TEST_F(LeaderSourceTest, TraceWriterRequiresIncreasingStamps) {
  TraceWriter writer((dir_ / "w.chtrace").string(), MakeTraceHeader(leader_, 100.0));
  StateFrame frame = HoldSource::AtHome(schema_).Sample(0);
  frame.stamp_ns = 10;
  writer.Append(frame);
  EXPECT_THROW(writer.Append(frame), Error);
  frame.stamp_ns = 20;
  frame.joint_positions.pop_back();
  frame.joint_velocities.pop_back();
  EXPECT_THROW(writer.Append(frame), SchemaMismatch);
}

Trace Synthetic(std::size_t n, double rate_hz) {
  Trace trace;
  trace.header.rate_hz = rate_hz;
  trace.header.joint_names = {"a"};
  for (std::size_t i = 0; i < n; ++i) {
    trace.samples.push_back({static_cast<std::int64_t>(std::llround(i * 1e9 / rate_hz)),
                             {static_cast<float>(i)}, {}, {1, 0, 0, 0}});
  }
  return trace;
}

TEST(ReplaySourceTest, SpeedScalesTime) {
  ReplaySource replay(Synthetic(1001, 100.0), 2.0);  // a 10 s trace
  EXPECT_EQ(replay.IndexAt(0), 0u);
  EXPECT_EQ(replay.IndexAt(500 * kMs), 100u);
  EXPECT_FALSE(replay.Finished(4990 * kMs));
  EXPECT_TRUE(replay.Finished(5000 * kMs));
  // One position unit per 10 ms of trace = 200 units/s at double speed.
  EXPECT_NEAR(replay.Sample(500 * kMs).joint_velocities[0], 200.0f, 1e-3);
}

TEST(ReplaySourceTest, WallClockAtDoubleSpeedIsHalf) {
  ReplaySource replay(Synthetic(201, 100.0), 2.0);  // 2 s trace
  const auto start = std::chrono::steady_clock::now();
  const auto period = std::chrono::milliseconds(10);
  std::int64_t t = 0;
  for (int k = 0; !replay.Finished(t); ++k) {
    std::this_thread::sleep_until(start + k * period);
    t = k * 10 * kMs;
    replay.Sample(t);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_NEAR(wall, 1.0, 0.1);
}

TEST(ReplaySourceTest, SingleSampleIsHeld) {
  ReplaySource replay(Synthetic(1, 100.0), 1.0);
  EXPECT_EQ(replay.Sample(0).joint_positions[0], 0.0f);
  EXPECT_EQ(replay.Sample(10'000 * kMs).joint_positions[0], 0.0f);
  EXPECT_EQ(replay.Sample(10'000 * kMs).joint_velocities[0], 0.0f);
  EXPECT_TRUE(replay.Finished(0));
}

TEST(ReplaySourceTest, EmptyTraceAndBadSpeed) {
  EXPECT_THROW(ReplaySource(Synthetic(0, 100.0), 1.0), EmptyTrace);
  EXPECT_THROW(ReplaySource(Synthetic(3, 100.0), 0.0), Error);
}

TEST_F(LeaderSourceTest, RecordingSourceTapsALiveStream) {
  const auto path = dir_ / "tap.chtrace";
  SineSweepSource sine(schema_, 0.1, 1.0);
  std::vector<StateFrame> seen;
  {
    RecordingSource tap(sine, leader_, path.string(), 100.0);
    for (int k = 0; k < 50; ++k) seen.push_back(tap.Sample(k * 10 * kMs));
    EXPECT_EQ(tap.recorded(), 50u);
    EXPECT_EQ(seen.back().seq, 50u);
  }
  const Trace trace = ReadTrace(path.string());
  ASSERT_EQ(trace.samples.size(), 50u);
  for (int k = 0; k < 50; ++k) {
    EXPECT_EQ(trace.samples[k].t_ns, k * 10 * kMs);
    EXPECT_EQ(trace.samples[k].positions, seen[k].joint_positions);
  }
}

// Replayed sine through the first-order follower vs the analytic steady
// state of a zero-order-held input: gain 1/sqrt(1+(w tau)^2), phase lag
// atan(w tau) plus half a sample.
TEST_F(LeaderSourceTest, ReplayedSineReachesFollowerWithinTrackingLag) {
  const double amplitude = 0.2, f = 0.25, rate = 100.0, dt = 1.0 / rate;
  SineSweepSource sine(schema_, amplitude, f);
  const auto path = dir_ / "lag.chtrace";
  Record(sine, leader_, path.string(), rate, 1000);
  ReplaySource replay(ReadTrace(path.string()), 1.0);

  const TeleopPlan plan = testing::G1Plan();
  const TrackingParams params = TrackingParams::FromConfig(plan.follower);
  const double tau = plan.follower.tracking.time_constant_s;
  const double w = 2 * kPi * f;
  const double gain = 1.0 / std::sqrt(1.0 + w * tau * w * tau);
  const double lag = std::atan(w * tau) + w * dt / 2.0;

  FollowerState follower = InitialFollowerState(plan.follower);
  const TeleopPlan::Pair pair = plan.pairs.front();
  const double home = plan.follower_joints[pair.follower].home_position;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const StateFrame frame = replay.Sample(k * 10 * kMs);
    CommandSet cmd;
    std::vector<double> targets = follower.joints;
    targets[pair.follower] = pair.sign * frame.joint_positions[pair.leader] + pair.offset;
    cmd.joint_targets = targets;
    follower = StepFollower(follower, cmd, dt, params);
    const double t = (k + 1) * dt;
    if (t < 1.0) continue;  // transient decays as exp(-t / tau)
    const double expected = home + amplitude * gain * std::sin(w * t - lag);
    worst = std::max(worst, std::abs(follower.joints[pair.follower] - expected));
  }
  EXPECT_LT(worst, 1e-3);
}

}  // namespace
}  // namespace child
