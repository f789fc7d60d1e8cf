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

#ifndef CHILD_CONFIG_H_
#define CHILD_CONFIG_H_

// Declarative device and mapping configuration. A leader config describes
// the limbs plugged into the operator's device; a follower config describes
// the robot and carries the leader->follower joint mapping. See
// docs/config_format.md for the file grammar.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace child {

enum class Role { kLeader, kFollower };
enum class LimbKind { kArm, kLeg, kNeck, kTorso };

// The seven physical mounts on the leader torso.
enum class MountId {
  kLegLeft,
  kLegRight,
  kArmFlatLeft,
  kArmFlatRight,
  kArmInclinedLeft,
  kArmInclinedRight,
  kTop,
};
inline constexpr std::size_t kMountCount = 7;

enum class Side { kLeft = 0, kRight = 1, kCenter = 2 };

enum class ImuMode { kTorsoJoints, kFloatingBase, kDisabled };
enum class LegMode { kDirectJoint, kJoystick };

std::string_view ToString(Role role);
std::string_view ToString(LimbKind kind);
std::string_view ToString(MountId mount);
std::string_view ToString(Side side);
std::string_view ToString(ImuMode mode);
std::string_view ToString(LegMode mode);

Side SideOf(MountId mount);
bool IsArmMount(MountId mount);
bool IsInclinedMount(MountId mount);

struct JointSpec {
  std::string name;
  double position_min = 0.0;
  double position_max = 0.0;
  double velocity_max = 1.0;
  double home_position = 0.0;

  double Clamp(double q) const;
  bool operator==(const JointSpec&) const = default;
};

struct LimbSpec {
  std::string name;
  LimbKind kind = LimbKind::kArm;
  // Torso limbs (waist joints on a follower) are not mounted.
  std::optional<MountId> mount;
  std::vector<JointSpec> joints;
  bool gripper = false;

  Side side() const { return mount ? SideOf(*mount) : Side::kCenter; }
  bool operator==(const LimbSpec&) const = default;
};

struct JointPair {
  std::string leader;
  std::string follower;
  int sign = 1;
  double offset = 0.0;

  bool operator==(const JointPair&) const = default;
};

// Follower joints driven by the IMU in TorsoJoints mode, one per axis.
struct TorsoJoints {
  std::string yaw;
  std::string roll;
  std::string pitch;

  bool empty() const { return yaw.empty() && roll.empty() && pitch.empty(); }
  bool operator==(const TorsoJoints&) const = default;
};

struct MappingSpec {
  std::vector<JointPair> pairs;
  // Link-length ratio of the leader hardware. Joint angles are not scaled.
  double scale_alpha = 1.0;
  ImuMode imu_mode = ImuMode::kDisabled;
  LegMode leg_mode = LegMode::kDirectJoint;
  TorsoJoints torso_joints;

  bool operator==(const MappingSpec&) const = default;
};

// Phase-dependent multipliers and spring constants for leader force
// feedback.
struct GainSchedule {
  double idle = 0.0;
  double synchronizing = 0.5;
  double normal_active = 1.0;
  double deactivated_arm = 3.0;
  double tau_max = 1.5;             // N*m, per joint
  double default_stiffness = 0.5;   // N*m/rad
  std::map<std::string, double> stiffness;  // per-joint overrides
  // After a joystick release the arm spring returns to the configured base
  // (home) instead of the pose frozen at engagement.
  bool revert_base_on_release = true;

  bool operator==(const GainSchedule&) const = default;
};

// Static part of the joystick calibration; the neutral hip pose is captured
// at run time.
struct LocomotionSpec {
  double deadband = 0.05;    // rad
  double roll_gain = 1.0;    // (m/s)/rad -> vy
  double pitch_gain = 1.0;   // (m/s)/rad -> vx
  double yaw_gain = 1.0;     // (rad/s)/rad -> wz
  double vx_max = 0.6;
  double vy_max = 0.4;
  double wz_max = 1.0;

  bool operator==(const LocomotionSpec&) const = default;
};

struct SessionParams {
  double close_threshold = 0.8;
  double release_threshold = 0.6;
  double activation_hold_s = 3.0;
  double toggle_hold_s = 1.0;
  double sync_epsilon = 0.02;           // rad
  double sync_velocity_fraction = 0.25; // of each joint's velocity_max
  double staleness_timeout_s = 0.2;

  bool operator==(const SessionParams&) const = default;
};

struct TrackingSpec {
  double time_constant_s = 0.05;

  bool operator==(const TrackingSpec&) const = default;
};

struct DeviceConfig {
  Role role = Role::kLeader;
  std::vector<LimbSpec> limbs;
  std::optional<MappingSpec> mapping;
  GainSchedule gains;
  LocomotionSpec locomotion;
  SessionParams session;
  TrackingSpec tracking;

  // Joints flattened in limb order, then joint order. This is the order of
  // StateFrame joint vectors for a leader and of JointVectors for a
  // follower.
  std::vector<JointSpec> FlatJoints() const;
  std::vector<std::string> JointNames() const;
  std::size_t JointCount() const;
  // Limbs carrying a gripper trigger, in limb order.
  std::vector<const LimbSpec*> GripperLimbs() const;
  const LimbSpec* FindLimb(std::string_view name) const;

  bool operator==(const DeviceConfig&) const = default;
};

// Throws SyntaxError, SchemaError or InvariantError.
DeviceConfig ParseConfig(std::string_view text);
DeviceConfig LoadConfigFile(const std::string& path);
std::string SerializeConfig(const DeviceConfig& config);

// Re-checks every type invariant; throws InvariantError naming the field.
void CheckInvariants(const DeviceConfig& config);

// Hip joints of a leg limb, located by name.
struct HipJoints {
  std::size_t roll;
  std::size_t pitch;
  std::size_t yaw;
};
std::optional<HipJoints> FindHipJoints(const LimbSpec& leg);

struct MappedJoint {
  std::string leader;
  std::string follower;
  std::string leader_limb;
  std::string follower_limb;
  int sign = 1;
  double offset = 0.0;
  double follower_min = 0.0;
  double follower_max = 0.0;
};

struct MappingReport {
  std::vector<MappedJoint> mapped;
  // Follower joints with no source; held at home_position during a session.
  std::vector<std::string> unmapped;
  // Mount approximations and other non-fatal observations.
  std::vector<std::string> notes;
  // Mapped-joint count per follower limb, in follower limb order.
  std::vector<std::pair<std::string, std::size_t>> mapped_per_limb;

  std::string Format() const;
};

// Throws MappingError on dangling references or one-to-many leader joints.
MappingReport ValidateMapping(const DeviceConfig& leader,
                              const DeviceConfig& follower);

// Index-resolved form of a leader/follower pair, built once per session.
struct TeleopPlan {
  struct Pair {
    std::size_t leader;
    std::size_t follower;
    int sign;
    double offset;
  };

  struct SideBinding {
    // Trigger index of this side's arm gripper on the leader.
    std::optional<std::size_t> leader_gripper;
    std::optional<std::size_t> follower_gripper;
    std::optional<std::size_t> leader_arm_limb;
    std::optional<std::size_t> leader_leg_limb;
    std::vector<std::size_t> leader_arm_joints;
    // Follower joints whose source is this side's leader arm / leg.
    std::vector<std::size_t> follower_from_arm;
    std::vector<std::size_t> follower_from_leg;
    // Leader indices of the leg's hip roll, pitch and yaw.
    std::optional<std::array<std::size_t, 3>> hip;
  };

  DeviceConfig leader;
  DeviceConfig follower;
  MappingSpec mapping;
  MappingReport report;
  std::vector<JointSpec> leader_joints;
  std::vector<JointSpec> follower_joints;
  std::vector<std::size_t> leader_limb_of_joint;
  std::vector<Pair> pairs;
  // Follower indices for yaw, roll, pitch; unset when no torso joints.
  std::optional<std::array<std::size_t, 3>> torso;
  // Follower gripper index -> leader trigger index.
  std::vector<std::optional<std::size_t>> follower_gripper_source;
  std::array<SideBinding, 2> sides;

  const SideBinding& side(Side s) const {
    return sides[static_cast<std::size_t>(s)];
  }
};

TeleopPlan MakePlan(const DeviceConfig& leader, const DeviceConfig& follower);

}  // namespace child

#endif  // CHILD_CONFIG_H_
