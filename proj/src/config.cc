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

#include "child/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <yaml-cpp/yaml.h>

#include "child/error.h"

namespace child {
namespace {

template <typename E, std::size_t N>
struct EnumNames {
  std::array<std::pair<E, std::string_view>, N> entries;

  std::string_view Name(E value) const {
    for (const auto& [e, name] : entries) {
      if (e == value) return name;
    }
    return "?";
  }

  std::optional<E> Parse(std::string_view text) const {
    for (const auto& [e, name] : entries) {
      if (name == text) return e;
    }
    return std::nullopt;
  }

  std::string Choices() const {
    std::string out;
    for (const auto& [e, name] : entries) {
      if (!out.empty()) out += "|";
      out += name;
    }
    return out;
  }
};

constexpr EnumNames<Role, 2> kRoleNames{
    {{{Role::kLeader, "leader"}, {Role::kFollower, "follower"}}}};
constexpr EnumNames<LimbKind, 4> kKindNames{{{{LimbKind::kArm, "arm"},
                                              {LimbKind::kLeg, "leg"},
                                              {LimbKind::kNeck, "neck"},
                                              {LimbKind::kTorso, "torso"}}}};
constexpr EnumNames<MountId, kMountCount> kMountNames{
    {{{MountId::kLegLeft, "leg_left"},
      {MountId::kLegRight, "leg_right"},
      {MountId::kArmFlatLeft, "arm_flat_left"},
      {MountId::kArmFlatRight, "arm_flat_right"},
      {MountId::kArmInclinedLeft, "arm_inclined_left"},
      {MountId::kArmInclinedRight, "arm_inclined_right"},
      {MountId::kTop, "top"}}}};
constexpr EnumNames<Side, 3> kSideNames{{{{Side::kLeft, "left"},
                                          {Side::kRight, "right"},
                                          {Side::kCenter, "center"}}}};
constexpr EnumNames<ImuMode, 3> kImuNames{
    {{{ImuMode::kTorsoJoints, "torso_joints"},
      {ImuMode::kFloatingBase, "floating_base"},
      {ImuMode::kDisabled, "disabled"}}}};
constexpr EnumNames<LegMode, 2> kLegModeNames{
    {{{LegMode::kDirectJoint, "direct_joint"},
      {LegMode::kJoystick, "joystick"}}}};

// ---------------------------------------------------------------------------
// Reading helpers. Every accessor takes the dotted path of the node so
// errors can name the offending field.

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string Index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void RequireMap(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) throw SchemaError(path, "expected a mapping");
}

void RequireSequence(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw SchemaError(path, "expected a list");
}

void RejectUnknownKeys(const YAML::Node& node, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  for (const auto& item : node) {
    std::string key;
    try {
      key = item.first.as<std::string>();
    } catch (const YAML::Exception&) {
      throw SchemaError(path, "non-scalar key");
    }
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(Join(path, key), "unknown field");
    }
  }
}

YAML::Node Required(const YAML::Node& node, const std::string& key,
                    const std::string& path) {
  YAML::Node child = node[key];
  if (!child.IsDefined() || child.IsNull()) {
    throw SchemaError(Join(path, key), "missing required field");
  }
  return child;
}

template <typename T>
T ReadScalar(const YAML::Node& node, const std::string& path,
             const char* type_name) {
  if (!node.IsScalar()) {
    throw SchemaError(path, std::string("expected ") + type_name);
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError(path, std::string("expected ") + type_name + ", got '" +
                                node.Scalar() + "'");
  }
}

double ReadDouble(const YAML::Node& node, const std::string& path) {
  return ReadScalar<double>(node, path, "a number");
}

std::string ReadString(const YAML::Node& node, const std::string& path) {
  return ReadScalar<std::string>(node, path, "a string");
}

template <typename E, std::size_t N>
E ReadEnum(const YAML::Node& node, const std::string& path,
           const EnumNames<E, N>& names) {
  const std::string text = ReadString(node, path);
  if (auto value = names.Parse(text)) return *value;
  throw SchemaError(path, "expected one of " + names.Choices() + ", got '" +
                              text + "'");
}

void ReadOptionalDouble(const YAML::Node& node, const std::string& key,
                        const std::string& path, double& out) {
  YAML::Node child = node[key];
  if (child.IsDefined() && !child.IsNull()) {
    out = ReadDouble(child, Join(path, key));
  }
}

// ---------------------------------------------------------------------------

JointSpec ParseJoint(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path, {"name", "min", "max", "vel_max", "home"});
  JointSpec joint;
  joint.name = ReadString(Required(node, "name", path), Join(path, "name"));
  joint.position_min = ReadDouble(Required(node, "min", path), Join(path, "min"));
  joint.position_max = ReadDouble(Required(node, "max", path), Join(path, "max"));
  joint.velocity_max = 3.0;
  ReadOptionalDouble(node, "vel_max", path, joint.velocity_max);
  if (node["home"].IsDefined() && !node["home"].IsNull()) {
    joint.home_position = ReadDouble(node["home"], Join(path, "home"));
  } else {
    joint.home_position =
        std::clamp(0.0, std::min(joint.position_min, joint.position_max),
                   std::max(joint.position_min, joint.position_max));
  }
  return joint;
}

LimbSpec ParseLimb(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path, {"name", "kind", "mount", "joints", "gripper"});
  LimbSpec limb;
  limb.name = ReadString(Required(node, "name", path), Join(path, "name"));
  limb.kind = ReadEnum(Required(node, "kind", path), Join(path, "kind"),
                       kKindNames);
  if (limb.kind == LimbKind::kTorso) {
    if (node["mount"].IsDefined() && !node["mount"].IsNull()) {
      limb.mount =
          ReadEnum(node["mount"], Join(path, "mount"), kMountNames);
    }
  } else {
    limb.mount = ReadEnum(Required(node, "mount", path), Join(path, "mount"),
                          kMountNames);
  }
  if (node["gripper"].IsDefined() && !node["gripper"].IsNull()) {
    limb.gripper =
        ReadScalar<bool>(node["gripper"], Join(path, "gripper"), "true|false");
  }
  const std::string joints_path = Join(path, "joints");
  YAML::Node joints = Required(node, "joints", path);
  RequireSequence(joints, joints_path);
  for (std::size_t i = 0; i < joints.size(); ++i) {
    limb.joints.push_back(ParseJoint(joints[i], Index(joints_path, i)));
  }
  return limb;
}

MappingSpec ParseMapping(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path, {"pairs", "scale_alpha", "imu_mode",
                                 "leg_mode", "torso_joints"});
  MappingSpec mapping;
  ReadOptionalDouble(node, "scale_alpha", path, mapping.scale_alpha);
  if (node["imu_mode"].IsDefined()) {
    mapping.imu_mode =
        ReadEnum(node["imu_mode"], Join(path, "imu_mode"), kImuNames);
  }
  if (node["leg_mode"].IsDefined()) {
    mapping.leg_mode =
        ReadEnum(node["leg_mode"], Join(path, "leg_mode"), kLegModeNames);
  }
  if (YAML::Node torso = node["torso_joints"]; torso.IsDefined()) {
    const std::string torso_path = Join(path, "torso_joints");
    RequireMap(torso, torso_path);
    RejectUnknownKeys(torso, torso_path, {"yaw", "roll", "pitch"});
    mapping.torso_joints.yaw =
        ReadString(Required(torso, "yaw", torso_path), Join(torso_path, "yaw"));
    mapping.torso_joints.roll = ReadString(Required(torso, "roll", torso_path),
                                           Join(torso_path, "roll"));
    mapping.torso_joints.pitch = ReadString(
        Required(torso, "pitch", torso_path), Join(torso_path, "pitch"));
  }
  if (YAML::Node pairs = node["pairs"]; pairs.IsDefined() && !pairs.IsNull()) {
    const std::string pairs_path = Join(path, "pairs");
    RequireSequence(pairs, pairs_path);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string p = Index(pairs_path, i);
      RequireMap(pairs[i], p);
      RejectUnknownKeys(pairs[i], p, {"leader", "follower", "sign", "offset"});
      JointPair pair;
      pair.leader = ReadString(Required(pairs[i], "leader", p), Join(p, "leader"));
      pair.follower =
          ReadString(Required(pairs[i], "follower", p), Join(p, "follower"));
      if (pairs[i]["sign"].IsDefined()) {
        pair.sign = ReadScalar<int>(pairs[i]["sign"], Join(p, "sign"),
                                    "an integer");
      }
      ReadOptionalDouble(pairs[i], "offset", p, pair.offset);
      mapping.pairs.push_back(std::move(pair));
    }
  }
  return mapping;
}

GainSchedule ParseGains(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path,
                    {"multipliers", "tau_max", "default_stiffness",
                     "stiffness", "revert_base_on_release"});
  GainSchedule gains;
  if (YAML::Node m = node["multipliers"]; m.IsDefined()) {
    const std::string mp = Join(path, "multipliers");
    RequireMap(m, mp);
    RejectUnknownKeys(m, mp, {"idle", "synchronizing", "normal_active",
                              "deactivated_arm"});
    ReadOptionalDouble(m, "idle", mp, gains.idle);
    ReadOptionalDouble(m, "synchronizing", mp, gains.synchronizing);
    ReadOptionalDouble(m, "normal_active", mp, gains.normal_active);
    ReadOptionalDouble(m, "deactivated_arm", mp, gains.deactivated_arm);
  }
  ReadOptionalDouble(node, "tau_max", path, gains.tau_max);
  ReadOptionalDouble(node, "default_stiffness", path, gains.default_stiffness);
  if (YAML::Node s = node["stiffness"]; s.IsDefined() && !s.IsNull()) {
    const std::string sp = Join(path, "stiffness");
    RequireMap(s, sp);
    for (const auto& item : s) {
      const std::string name = ReadString(item.first, sp);
      gains.stiffness[name] = ReadDouble(item.second, Join(sp, name));
    }
  }
  if (YAML::Node r = node["revert_base_on_release"]; r.IsDefined()) {
    gains.revert_base_on_release = ReadScalar<bool>(
        r, Join(path, "revert_base_on_release"), "true|false");
  }
  return gains;
}

LocomotionSpec ParseLocomotion(const YAML::Node& node,
                               const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path, {"deadband", "roll_gain", "pitch_gain",
                                 "yaw_gain", "vx_max", "vy_max", "wz_max"});
  LocomotionSpec spec;
  ReadOptionalDouble(node, "deadband", path, spec.deadband);
  ReadOptionalDouble(node, "roll_gain", path, spec.roll_gain);
  ReadOptionalDouble(node, "pitch_gain", path, spec.pitch_gain);
  ReadOptionalDouble(node, "yaw_gain", path, spec.yaw_gain);
  ReadOptionalDouble(node, "vx_max", path, spec.vx_max);
  ReadOptionalDouble(node, "vy_max", path, spec.vy_max);
  ReadOptionalDouble(node, "wz_max", path, spec.wz_max);
  return spec;
}

SessionParams ParseSession(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path,
                    {"close_threshold", "release_threshold",
                     "activation_hold", "toggle_hold", "sync_epsilon",
                     "sync_velocity_fraction", "staleness_timeout"});
  SessionParams params;
  ReadOptionalDouble(node, "close_threshold", path, params.close_threshold);
  ReadOptionalDouble(node, "release_threshold", path,
                     params.release_threshold);
  ReadOptionalDouble(node, "activation_hold", path, params.activation_hold_s);
  ReadOptionalDouble(node, "toggle_hold", path, params.toggle_hold_s);
  ReadOptionalDouble(node, "sync_epsilon", path, params.sync_epsilon);
  ReadOptionalDouble(node, "sync_velocity_fraction", path,
                     params.sync_velocity_fraction);
  ReadOptionalDouble(node, "staleness_timeout", path,
                     params.staleness_timeout_s);
  return params;
}

TrackingSpec ParseTracking(const YAML::Node& node, const std::string& path) {
  RequireMap(node, path);
  RejectUnknownKeys(node, path, {"time_constant"});
  TrackingSpec spec;
  ReadOptionalDouble(node, "time_constant", path, spec.time_constant_s);
  return spec;
}

// ---------------------------------------------------------------------------
// Invariants.

void CheckFinite(double value, const std::string& path) {
  if (!std::isfinite(value)) throw InvariantError(path, "must be finite");
}

void CheckJoint(const JointSpec& joint, const std::string& path) {
  if (joint.name.empty()) throw InvariantError(Join(path, "name"), "empty");
  CheckFinite(joint.position_min, Join(path, "min"));
  CheckFinite(joint.position_max, Join(path, "max"));
  CheckFinite(joint.velocity_max, Join(path, "vel_max"));
  CheckFinite(joint.home_position, Join(path, "home"));
  if (!(joint.position_min < joint.position_max)) {
    throw InvariantError(Join(path, "min"), "min must be < max");
  }
  if (joint.home_position < joint.position_min ||
      joint.home_position > joint.position_max) {
    throw InvariantError(Join(path, "home"), "home outside [min, max]");
  }
  if (!(joint.velocity_max > 0.0)) {
    throw InvariantError(Join(path, "vel_max"), "must be > 0");
  }
}

void CheckLimb(const LimbSpec& limb, const std::string& path) {
  if (limb.name.empty()) throw InvariantError(Join(path, "name"), "empty");
  if (limb.kind != LimbKind::kTorso && !limb.mount) {
    throw InvariantError(Join(path, "mount"), "non-torso limbs need a mount");
  }
  if (limb.joints.empty()) {
    throw InvariantError(Join(path, "joints"), "limb has no joints");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < limb.joints.size(); ++i) {
    const std::string jp = Index(Join(path, "joints"), i);
    CheckJoint(limb.joints[i], jp);
    if (!names.insert(limb.joints[i].name).second) {
      throw InvariantError(Join(jp, "name"), "duplicate joint name '" +
                                                 limb.joints[i].name + "'");
    }
  }
  if (limb.kind == LimbKind::kLeg) {
    if (limb.joints.size() < 3) {
      throw InvariantError(Join(path, "joints"),
                           "a leg needs at least 3 joints");
    }
    if (!FindHipJoints(limb)) {
      throw InvariantError(Join(path, "joints"),
                           "a leg needs joints named *hip_roll*, *hip_pitch* "
                           "and *hip_yaw*");
    }
  }
}

void CheckMapping(const MappingSpec& mapping, const std::string& path) {
  if (!(mapping.scale_alpha > 0.0 && mapping.scale_alpha <= 1.0)) {
    throw InvariantError(Join(path, "scale_alpha"), "must be in (0, 1]");
  }
  std::set<std::string> followers;
  for (std::size_t i = 0; i < mapping.pairs.size(); ++i) {
    const JointPair& pair = mapping.pairs[i];
    const std::string p = Index(Join(path, "pairs"), i);
    if (pair.sign != 1 && pair.sign != -1) {
      throw InvariantError(Join(p, "sign"), "must be +1 or -1");
    }
    CheckFinite(pair.offset, Join(p, "offset"));
    if (pair.leader.empty()) throw InvariantError(Join(p, "leader"), "empty");
    if (pair.follower.empty()) {
      throw InvariantError(Join(p, "follower"), "empty");
    }
    if (!followers.insert(pair.follower).second) {
      throw InvariantError(Join(p, "follower"),
                           "follower joint '" + pair.follower +
                               "' mapped more than once");
    }
  }
  const TorsoJoints& torso = mapping.torso_joints;
  const bool partial = !torso.empty() && (torso.yaw.empty() ||
                                          torso.roll.empty() ||
                                          torso.pitch.empty());
  if (partial) {
    throw InvariantError(Join(path, "torso_joints"),
                         "yaw, roll and pitch must all be named");
  }
  if (mapping.imu_mode == ImuMode::kTorsoJoints && torso.empty()) {
    throw InvariantError(Join(path, "torso_joints"),
                         "imu_mode torso_joints needs torso_joints");
  }
}

void CheckGains(const GainSchedule& gains, const std::string& path) {
  const std::string mp = Join(path, "multipliers");
  const std::pair<double, const char*> multipliers[] = {
      {gains.idle, "idle"},
      {gains.synchronizing, "synchronizing"},
      {gains.normal_active, "normal_active"},
      {gains.deactivated_arm, "deactivated_arm"}};
  for (const auto& [value, name] : multipliers) {
    CheckFinite(value, Join(mp, name));
    if (value < 0.0) throw InvariantError(Join(mp, name), "must be >= 0");
  }
  if (gains.deactivated_arm < gains.normal_active) {
    throw InvariantError(Join(mp, "deactivated_arm"),
                         "must be >= normal_active");
  }
  CheckFinite(gains.tau_max, Join(path, "tau_max"));
  if (!(gains.tau_max > 0.0)) {
    throw InvariantError(Join(path, "tau_max"), "must be > 0");
  }
  CheckFinite(gains.default_stiffness, Join(path, "default_stiffness"));
  if (gains.default_stiffness < 0.0) {
    throw InvariantError(Join(path, "default_stiffness"), "must be >= 0");
  }
  for (const auto& [name, k] : gains.stiffness) {
    const std::string kp = Join(Join(path, "stiffness"), name);
    CheckFinite(k, kp);
    if (k < 0.0) throw InvariantError(kp, "must be >= 0");
  }
}

void CheckLocomotion(const LocomotionSpec& spec, const std::string& path) {
  CheckFinite(spec.deadband, Join(path, "deadband"));
  if (spec.deadband < 0.0) {
    throw InvariantError(Join(path, "deadband"), "must be >= 0");
  }
  CheckFinite(spec.roll_gain, Join(path, "roll_gain"));
  CheckFinite(spec.pitch_gain, Join(path, "pitch_gain"));
  CheckFinite(spec.yaw_gain, Join(path, "yaw_gain"));
  const std::pair<double, const char*> maxima[] = {
      {spec.vx_max, "vx_max"}, {spec.vy_max, "vy_max"}, {spec.wz_max, "wz_max"}};
  for (const auto& [value, name] : maxima) {
    CheckFinite(value, Join(path, name));
    if (!(value > 0.0)) throw InvariantError(Join(path, name), "must be > 0");
  }
}

void CheckSession(const SessionParams& p, const std::string& path) {
  CheckFinite(p.close_threshold, Join(path, "close_threshold"));
  CheckFinite(p.release_threshold, Join(path, "release_threshold"));
  if (!(p.release_threshold > 0.0 && p.release_threshold <= p.close_threshold &&
        p.close_threshold <= 1.0)) {
    throw InvariantError(Join(path, "release_threshold"),
                         "need 0 < release_threshold <= close_threshold <= 1");
  }
  const std::pair<double, const char*> positive[] = {
      {p.activation_hold_s, "activation_hold"},
      {p.toggle_hold_s, "toggle_hold"},
      {p.sync_epsilon, "sync_epsilon"},
      {p.staleness_timeout_s, "staleness_timeout"}};
  for (const auto& [value, name] : positive) {
    CheckFinite(value, Join(path, name));
    if (!(value > 0.0)) throw InvariantError(Join(path, name), "must be > 0");
  }
  CheckFinite(p.sync_velocity_fraction, Join(path, "sync_velocity_fraction"));
  if (!(p.sync_velocity_fraction > 0.0 && p.sync_velocity_fraction <= 1.0)) {
    throw InvariantError(Join(path, "sync_velocity_fraction"),
                         "must be in (0, 1]");
  }
}

// ---------------------------------------------------------------------------

void EmitJoint(YAML::Emitter& out, const JointSpec& joint) {
  out << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << joint.name;
  out << YAML::Key << "min" << YAML::Value << joint.position_min;
  out << YAML::Key << "max" << YAML::Value << joint.position_max;
  out << YAML::Key << "vel_max" << YAML::Value << joint.velocity_max;
  out << YAML::Key << "home" << YAML::Value << joint.home_position;
  out << YAML::EndMap;
}

template <typename E, std::size_t N>
std::string Str(const EnumNames<E, N>& names, E value) {
  return std::string(names.Name(value));
}

}  // namespace

std::string_view ToString(Role role) { return kRoleNames.Name(role); }
std::string_view ToString(LimbKind kind) { return kKindNames.Name(kind); }
std::string_view ToString(MountId mount) { return kMountNames.Name(mount); }
std::string_view ToString(Side side) { return kSideNames.Name(side); }
std::string_view ToString(ImuMode mode) { return kImuNames.Name(mode); }
std::string_view ToString(LegMode mode) { return kLegModeNames.Name(mode); }

Side SideOf(MountId mount) {
  switch (mount) {
    case MountId::kLegLeft:
    case MountId::kArmFlatLeft:
    case MountId::kArmInclinedLeft:
      return Side::kLeft;
    case MountId::kLegRight:
    case MountId::kArmFlatRight:
    case MountId::kArmInclinedRight:
      return Side::kRight;
    case MountId::kTop:
      return Side::kCenter;
  }
  return Side::kCenter;
}

bool IsArmMount(MountId mount) {
  return mount == MountId::kArmFlatLeft || mount == MountId::kArmFlatRight ||
         mount == MountId::kArmInclinedLeft ||
         mount == MountId::kArmInclinedRight;
}

bool IsInclinedMount(MountId mount) {
  return mount == MountId::kArmInclinedLeft ||
         mount == MountId::kArmInclinedRight;
}

double JointSpec::Clamp(double q) const {
  return std::clamp(q, position_min, position_max);
}

std::vector<JointSpec> DeviceConfig::FlatJoints() const {
  std::vector<JointSpec> joints;
  for (const LimbSpec& limb : limbs) {
    joints.insert(joints.end(), limb.joints.begin(), limb.joints.end());
  }
  return joints;
}

std::vector<std::string> DeviceConfig::JointNames() const {
  std::vector<std::string> names;
  for (const LimbSpec& limb : limbs) {
    for (const JointSpec& joint : limb.joints) names.push_back(joint.name);
  }
  return names;
}

std::size_t DeviceConfig::JointCount() const {
  std::size_t n = 0;
  for (const LimbSpec& limb : limbs) n += limb.joints.size();
  return n;
}

std::vector<const LimbSpec*> DeviceConfig::GripperLimbs() const {
  std::vector<const LimbSpec*> out;
  for (const LimbSpec& limb : limbs) {
    if (limb.gripper) out.push_back(&limb);
  }
  return out;
}

const LimbSpec* DeviceConfig::FindLimb(std::string_view name) const {
  for (const LimbSpec& limb : limbs) {
    if (limb.name == name) return &limb;
  }
  return nullptr;
}

std::optional<HipJoints> FindHipJoints(const LimbSpec& leg) {
  std::optional<std::size_t> roll, pitch, yaw;
  for (std::size_t i = 0; i < leg.joints.size(); ++i) {
    const std::string& name = leg.joints[i].name;
    if (!roll && name.find("hip_roll") != std::string::npos) roll = i;
    if (!pitch && name.find("hip_pitch") != std::string::npos) pitch = i;
    if (!yaw && name.find("hip_yaw") != std::string::npos) yaw = i;
  }
  if (!roll || !pitch || !yaw) return std::nullopt;
  return HipJoints{*roll, *pitch, *yaw};
}

void CheckInvariants(const DeviceConfig& config) {
  std::map<std::string, std::size_t> limb_names;
  std::map<MountId, std::size_t> mounts;
  std::map<std::string, std::string> joint_owner;
  for (std::size_t i = 0; i < config.limbs.size(); ++i) {
    const LimbSpec& limb = config.limbs[i];
    const std::string path = Index("limbs", i);
    CheckLimb(limb, path);
    if (auto [it, fresh] = limb_names.emplace(limb.name, i); !fresh) {
      throw InvariantError(Join(path, "name"),
                           "duplicate limb name '" + limb.name + "'");
    }
    if (limb.mount) {
      if (auto [it, fresh] = mounts.emplace(*limb.mount, i); !fresh) {
        throw InvariantError(
            Join(path, "mount"),
            "limbs '" + config.limbs[it->second].name + "' and '" +
                limb.name + "' share mount " +
                std::string(ToString(*limb.mount)));
      }
    }
    // Pairs reference joints by bare name, so names are device-unique.
    for (std::size_t j = 0; j < limb.joints.size(); ++j) {
      const std::string& name = limb.joints[j].name;
      if (auto [it, fresh] = joint_owner.emplace(name, limb.name); !fresh) {
        throw InvariantError(Join(Index(Join(path, "joints"), j), "name"),
                             "joint '" + name + "' also defined in limb '" +
                                 it->second + "'");
      }
    }
  }
  if (config.mapping) {
    if (config.role != Role::kFollower) {
      throw InvariantError("mapping", "only a follower config has a mapping");
    }
    CheckMapping(*config.mapping, "mapping");
  }
  CheckGains(config.gains, "gains");
  CheckLocomotion(config.locomotion, "locomotion");
  CheckSession(config.session, "session");
  CheckFinite(config.tracking.time_constant_s, "tracking.time_constant");
  if (!(config.tracking.time_constant_s > 0.0)) {
    throw InvariantError("tracking.time_constant", "must be > 0");
  }
}

DeviceConfig ParseConfig(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw SyntaxError(e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  if (!root.IsMap()) throw SchemaError("", "document must be a mapping");
  RejectUnknownKeys(root, "", {"role", "limbs", "mapping", "gains",
                               "locomotion", "session", "tracking"});
  DeviceConfig config;
  config.role = ReadEnum(Required(root, "role", ""), "role", kRoleNames);
  YAML::Node limbs = Required(root, "limbs", "");
  RequireSequence(limbs, "limbs");
  for (std::size_t i = 0; i < limbs.size(); ++i) {
    config.limbs.push_back(ParseLimb(limbs[i], Index("limbs", i)));
  }
  if (YAML::Node m = root["mapping"]; m.IsDefined() && !m.IsNull()) {
    config.mapping = ParseMapping(m, "mapping");
  }
  if (YAML::Node g = root["gains"]; g.IsDefined() && !g.IsNull()) {
    config.gains = ParseGains(g, "gains");
  }
  if (YAML::Node l = root["locomotion"]; l.IsDefined() && !l.IsNull()) {
    config.locomotion = ParseLocomotion(l, "locomotion");
  }
  if (YAML::Node s = root["session"]; s.IsDefined() && !s.IsNull()) {
    config.session = ParseSession(s, "session");
  }
  if (YAML::Node t = root["tracking"]; t.IsDefined() && !t.IsNull()) {
    config.tracking = ParseTracking(t, "tracking");
  }
  CheckInvariants(config);
  return config;
}

DeviceConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseConfig(buffer.str());
  } catch (const ConfigError& e) {
    throw Error("config", path + ": " + e.what());
  }
}

std::string SerializeConfig(const DeviceConfig& config) {
  YAML::Emitter out;
  out.SetDoublePrecision(std::numeric_limits<double>::max_digits10);
  out << YAML::BeginMap;
  out << YAML::Key << "role" << YAML::Value << Str(kRoleNames, config.role);
  out << YAML::Key << "limbs" << YAML::Value << YAML::BeginSeq;
  for (const LimbSpec& limb : config.limbs) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << limb.name;
    out << YAML::Key << "kind" << YAML::Value << Str(kKindNames, limb.kind);
    if (limb.mount) {
      out << YAML::Key << "mount" << YAML::Value
          << Str(kMountNames, *limb.mount);
    }
    out << YAML::Key << "gripper" << YAML::Value << limb.gripper;
    out << YAML::Key << "joints" << YAML::Value << YAML::BeginSeq;
    for (const JointSpec& joint : limb.joints) EmitJoint(out, joint);
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (config.mapping) {
    const MappingSpec& m = *config.mapping;
    out << YAML::Key << "mapping" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "scale_alpha" << YAML::Value << m.scale_alpha;
    out << YAML::Key << "imu_mode" << YAML::Value << Str(kImuNames, m.imu_mode);
    out << YAML::Key << "leg_mode" << YAML::Value
        << Str(kLegModeNames, m.leg_mode);
    if (!m.torso_joints.empty()) {
      out << YAML::Key << "torso_joints" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "yaw" << YAML::Value << m.torso_joints.yaw;
      out << YAML::Key << "roll" << YAML::Value << m.torso_joints.roll;
      out << YAML::Key << "pitch" << YAML::Value << m.torso_joints.pitch;
      out << YAML::EndMap;
    }
    out << YAML::Key << "pairs" << YAML::Value << YAML::BeginSeq;
    for (const JointPair& pair : m.pairs) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "leader" << YAML::Value << pair.leader;
      out << YAML::Key << "follower" << YAML::Value << pair.follower;
      out << YAML::Key << "sign" << YAML::Value << pair.sign;
      out << YAML::Key << "offset" << YAML::Value << pair.offset;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }

  const GainSchedule& g = config.gains;
  out << YAML::Key << "gains" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "multipliers" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "idle" << YAML::Value << g.idle;
  out << YAML::Key << "synchronizing" << YAML::Value << g.synchronizing;
  out << YAML::Key << "normal_active" << YAML::Value << g.normal_active;
  out << YAML::Key << "deactivated_arm" << YAML::Value << g.deactivated_arm;
  out << YAML::EndMap;
  out << YAML::Key << "tau_max" << YAML::Value << g.tau_max;
  out << YAML::Key << "default_stiffness" << YAML::Value
      << g.default_stiffness;
  if (!g.stiffness.empty()) {
    out << YAML::Key << "stiffness" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, k] : g.stiffness) {
      out << YAML::Key << name << YAML::Value << k;
    }
    out << YAML::EndMap;
  }
  out << YAML::Key << "revert_base_on_release" << YAML::Value
      << g.revert_base_on_release;
  out << YAML::EndMap;

  const LocomotionSpec& l = config.locomotion;
  out << YAML::Key << "locomotion" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "deadband" << YAML::Value << l.deadband;
  out << YAML::Key << "roll_gain" << YAML::Value << l.roll_gain;
  out << YAML::Key << "pitch_gain" << YAML::Value << l.pitch_gain;
  out << YAML::Key << "yaw_gain" << YAML::Value << l.yaw_gain;
  out << YAML::Key << "vx_max" << YAML::Value << l.vx_max;
  out << YAML::Key << "vy_max" << YAML::Value << l.vy_max;
  out << YAML::Key << "wz_max" << YAML::Value << l.wz_max;
  out << YAML::EndMap;

  const SessionParams& s = config.session;
  out << YAML::Key << "session" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "close_threshold" << YAML::Value << s.close_threshold;
  out << YAML::Key << "release_threshold" << YAML::Value
      << s.release_threshold;
  out << YAML::Key << "activation_hold" << YAML::Value << s.activation_hold_s;
  out << YAML::Key << "toggle_hold" << YAML::Value << s.toggle_hold_s;
  out << YAML::Key << "sync_epsilon" << YAML::Value << s.sync_epsilon;
  out << YAML::Key << "sync_velocity_fraction" << YAML::Value
      << s.sync_velocity_fraction;
  out << YAML::Key << "staleness_timeout" << YAML::Value
      << s.staleness_timeout_s;
  out << YAML::EndMap;

  out << YAML::Key << "tracking" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "time_constant" << YAML::Value
      << config.tracking.time_constant_s;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Mapping validation.

namespace {

struct JointLocation {
  std::size_t limb;
  std::size_t flat_index;
};

std::unordered_map<std::string, JointLocation> IndexJoints(
    const DeviceConfig& config) {
  std::unordered_map<std::string, JointLocation> out;
  std::size_t flat = 0;
  for (std::size_t l = 0; l < config.limbs.size(); ++l) {
    for (const JointSpec& joint : config.limbs[l].joints) {
      out.emplace(joint.name, JointLocation{l, flat++});
    }
  }
  return out;
}

std::string MountName(const LimbSpec& limb) {
  return limb.mount ? std::string(ToString(*limb.mount)) : "unmounted";
}

}  // namespace

MappingReport ValidateMapping(const DeviceConfig& leader,
                              const DeviceConfig& follower) {
  if (!follower.mapping) {
    throw MappingError("<mapping>", "follower config has no mapping section");
  }
  const MappingSpec& mapping = *follower.mapping;
  const auto leader_joints = IndexJoints(leader);
  const auto follower_joints = IndexJoints(follower);
  const auto follower_flat = follower.FlatJoints();

  MappingReport report;
  std::set<std::string> leaders_used;
  std::set<std::string> followers_driven;
  std::set<std::pair<std::size_t, std::size_t>> limb_pairs;

  for (const JointPair& pair : mapping.pairs) {
    auto l = leader_joints.find(pair.leader);
    if (l == leader_joints.end()) {
      throw MappingError(pair.leader, "leader joint not found on leader device");
    }
    auto f = follower_joints.find(pair.follower);
    if (f == follower_joints.end()) {
      throw MappingError(pair.follower,
                         "follower joint not found on follower device");
    }
    if (!leaders_used.insert(pair.leader).second) {
      throw MappingError(pair.leader,
                         "leader joint maps to two follower joints");
    }
    followers_driven.insert(pair.follower);
    const JointSpec& fj = follower_flat[f->second.flat_index];
    report.mapped.push_back({pair.leader, pair.follower,
                             leader.limbs[l->second.limb].name,
                             follower.limbs[f->second.limb].name, pair.sign,
                             pair.offset, fj.position_min, fj.position_max});
    limb_pairs.emplace(l->second.limb, f->second.limb);
  }

  const TorsoJoints& torso = mapping.torso_joints;
  if (!torso.empty()) {
    for (const std::string* name : {&torso.yaw, &torso.roll, &torso.pitch}) {
      if (!follower_joints.count(*name)) {
        throw MappingError(*name, "torso joint not found on follower device");
      }
      if (followers_driven.count(*name)) {
        throw MappingError(*name,
                           "torso joint is also the target of a joint pair");
      }
    }
    if (mapping.imu_mode == ImuMode::kTorsoJoints) {
      followers_driven.insert(torso.yaw);
      followers_driven.insert(torso.roll);
      followers_driven.insert(torso.pitch);
    } else if (mapping.imu_mode == ImuMode::kFloatingBase) {
      report.notes.push_back(
          "imu_mode floating_base: torso joints held at home, IMU drives the "
          "base orientation");
    }
  }

  for (const JointSpec& joint : follower_flat) {
    if (!followers_driven.count(joint.name)) {
      report.unmapped.push_back(joint.name);
    }
  }

  for (const auto& [li, fi] : limb_pairs) {
    const LimbSpec& ll = leader.limbs[li];
    const LimbSpec& fl = follower.limbs[fi];
    if (ll.kind != fl.kind) {
      report.notes.push_back("limb kind differs: leader '" + ll.name + "' (" +
                             std::string(ToString(ll.kind)) +
                             ") drives follower '" + fl.name + "' (" +
                             std::string(ToString(fl.kind)) + ")");
    }
    if (ll.mount && fl.mount && IsArmMount(*ll.mount) &&
        IsArmMount(*fl.mount) &&
        IsInclinedMount(*ll.mount) != IsInclinedMount(*fl.mount)) {
      report.notes.push_back("approximation: leader '" + ll.name + "' on " +
                             MountName(ll) + " drives follower '" + fl.name +
                             "' on " + MountName(fl) +
                             " (closest matching shoulder mount)");
    }
    if (ll.side() != fl.side()) {
      report.notes.push_back("side differs: leader '" + ll.name + "' (" +
                             std::string(ToString(ll.side())) +
                             ") drives follower '" + fl.name + "' (" +
                             std::string(ToString(fl.side())) + ")");
    }
  }

  if (leader.GripperLimbs().empty()) {
    report.notes.push_back(
        "leader has no gripper trigger: the session cannot be activated");
  }
  if (mapping.leg_mode == LegMode::kJoystick) {
    for (Side side : {Side::kLeft, Side::kRight}) {
      bool leg = false;
      bool gripper = false;
      for (const LimbSpec& limb : leader.limbs) {
        if (limb.side() != side) continue;
        leg |= limb.kind == LimbKind::kLeg;
        gripper |= limb.kind == LimbKind::kArm && limb.gripper;
      }
      if (leg && !gripper) {
        report.notes.push_back("joystick on the " +
                               std::string(ToString(side)) +
                               " side is unreachable: no gripper on that arm");
      }
    }
  }

  for (const LimbSpec& limb : follower.limbs) {
    std::size_t count = 0;
    for (const MappedJoint& m : report.mapped) {
      count += m.follower_limb == limb.name;
    }
    report.mapped_per_limb.emplace_back(limb.name, count);
  }
  return report;
}

std::string MappingReport::Format() const {
  std::ostringstream out;
  out << mapped.size() << " joint pairs mapped\n";
  for (const auto& [limb, count] : mapped_per_limb) {
    out << "  " << limb << ": " << count << " mapped\n";
  }
  if (!unmapped.empty()) {
    out << unmapped.size() << " unmapped follower joints (hold home):";
    for (const std::string& name : unmapped) out << " " << name;
    out << "\n";
  }
  for (const std::string& note : notes) out << "warning: " << note << "\n";
  return out.str();
}

TeleopPlan MakePlan(const DeviceConfig& leader, const DeviceConfig& follower) {
  TeleopPlan plan;
  plan.report = ValidateMapping(leader, follower);
  plan.leader = leader;
  plan.follower = follower;
  plan.mapping = *follower.mapping;
  plan.leader_joints = leader.FlatJoints();
  plan.follower_joints = follower.FlatJoints();

  const auto leader_index = IndexJoints(leader);
  const auto follower_index = IndexJoints(follower);
  for (std::size_t l = 0; l < leader.limbs.size(); ++l) {
    for (std::size_t j = 0; j < leader.limbs[l].joints.size(); ++j) {
      plan.leader_limb_of_joint.push_back(l);
    }
  }
  for (const JointPair& pair : plan.mapping.pairs) {
    plan.pairs.push_back({leader_index.at(pair.leader).flat_index,
                          follower_index.at(pair.follower).flat_index,
                          pair.sign, pair.offset});
  }
  if (!plan.mapping.torso_joints.empty()) {
    const TorsoJoints& t = plan.mapping.torso_joints;
    plan.torso = {follower_index.at(t.yaw).flat_index,
                  follower_index.at(t.roll).flat_index,
                  follower_index.at(t.pitch).flat_index};
  }

  std::vector<std::size_t> limb_start(leader.limbs.size());
  for (std::size_t l = 0, flat = 0; l < leader.limbs.size(); ++l) {
    limb_start[l] = flat;
    flat += leader.limbs[l].joints.size();
  }

  const auto leader_grippers = leader.GripperLimbs();
  auto trigger_index = [&](const LimbSpec* limb) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < leader_grippers.size(); ++i) {
      if (leader_grippers[i] == limb) return i;
    }
    return std::nullopt;
  };

  for (Side side : {Side::kLeft, Side::kRight}) {
    TeleopPlan::SideBinding& binding =
        plan.sides[static_cast<std::size_t>(side)];
    for (std::size_t l = 0; l < leader.limbs.size(); ++l) {
      const LimbSpec& limb = leader.limbs[l];
      if (limb.side() != side) continue;
      if (limb.kind == LimbKind::kArm && !binding.leader_arm_limb) {
        binding.leader_arm_limb = l;
        binding.leader_gripper = trigger_index(&limb);
        for (std::size_t j = 0; j < limb.joints.size(); ++j) {
          binding.leader_arm_joints.push_back(limb_start[l] + j);
        }
      } else if (limb.kind == LimbKind::kLeg && !binding.leader_leg_limb) {
        binding.leader_leg_limb = l;
        const HipJoints hip = *FindHipJoints(limb);
        binding.hip = {limb_start[l] + hip.roll, limb_start[l] + hip.pitch,
                       limb_start[l] + hip.yaw};
      }
    }
    for (const TeleopPlan::Pair& pair : plan.pairs) {
      const std::size_t limb = plan.leader_limb_of_joint[pair.leader];
      if (binding.leader_arm_limb && limb == *binding.leader_arm_limb) {
        binding.follower_from_arm.push_back(pair.follower);
      }
      if (binding.leader_leg_limb && limb == *binding.leader_leg_limb) {
        binding.follower_from_leg.push_back(pair.follower);
      }
    }
  }

  std::size_t follower_gripper = 0;
  for (const LimbSpec* limb : follower.GripperLimbs()) {
    std::optional<std::size_t> source;
    for (const LimbSpec* candidate : leader_grippers) {
      if (candidate->side() == limb->side()) {
        source = trigger_index(candidate);
        break;
      }
    }
    plan.follower_gripper_source.push_back(source);
    if (limb->kind == LimbKind::kArm && limb->side() != Side::kCenter) {
      auto& binding = plan.sides[static_cast<std::size_t>(limb->side())];
      if (!binding.follower_gripper) binding.follower_gripper = follower_gripper;
    }
    ++follower_gripper;
  }
  return plan;
}

}  // namespace child
