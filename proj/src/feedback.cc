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

#include "child/feedback.h"

#include <algorithm>

namespace child {

std::string_view ToString(FeedbackPhase phase) {
  switch (phase) {
    case FeedbackPhase::kIdle: return "Idle";
    case FeedbackPhase::kSynchronizing: return "Synchronizing";
    case FeedbackPhase::kNormalActive: return "NormalActive";
    case FeedbackPhase::kDeactivatedArm: return "DeactivatedArm";
  }
  return "?";
}

double Multiplier(const GainSchedule& schedule, FeedbackPhase phase) {
  switch (phase) {
    case FeedbackPhase::kIdle: return schedule.idle;
    case FeedbackPhase::kSynchronizing: return schedule.synchronizing;
    case FeedbackPhase::kNormalActive: return schedule.normal_active;
    case FeedbackPhase::kDeactivatedArm: return schedule.deactivated_arm;
  }
  return 0.0;
}

SpringParams DefaultSpringParams(const DeviceConfig& leader) {
  SpringParams params;
  for (const JointSpec& joint : leader.FlatJoints()) {
    auto it = leader.gains.stiffness.find(joint.name);
    params.k.push_back(it != leader.gains.stiffness.end()
                           ? it->second
                           : leader.gains.default_stiffness);
    params.q_base.push_back(joint.home_position);
  }
  return params;
}

std::vector<double> BiasTorque(std::span<const double> q,
                               const SpringParams& params,
                               std::span<const FeedbackPhase> phases,
                               const GainSchedule& schedule) {
  if (q.size() != params.k.size() || q.size() != params.q_base.size() ||
      q.size() != phases.size()) {
    throw SchemaMismatch("feedback", "q has " + std::to_string(q.size()) +
                                         " joints, spring params " +
                                         std::to_string(params.k.size()));
  }
  std::vector<double> tau(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    // Spring term first, so phases differ exactly by the multiplier ratio.
    const double spring = -params.k[i] * (q[i] - params.q_base[i]);
    tau[i] = std::clamp(Multiplier(schedule, phases[i]) * spring,
                        -schedule.tau_max, schedule.tau_max);
  }
  return tau;
}

std::vector<double> BiasTorque(std::span<const double> q,
                               const SpringParams& params, FeedbackPhase phase,
                               const GainSchedule& schedule) {
  const std::vector<FeedbackPhase> phases(q.size(), phase);
  return BiasTorque(q, params, phases, schedule);
}

namespace {

std::size_t LimbIndex(const TeleopPlan& plan, std::string_view limb) {
  for (std::size_t i = 0; i < plan.leader.limbs.size(); ++i) {
    if (plan.leader.limbs[i].name == limb) return i;
  }
  throw UnknownLimb(std::string(limb));
}

}  // namespace

FeedbackPhase PhaseOf(const SessionState& state, const TeleopPlan& plan,
                      std::string_view limb) {
  const std::size_t index = LimbIndex(plan, limb);
  switch (state.phase) {
    case Phase::kIdle:
    case Phase::kArming:
      return FeedbackPhase::kIdle;
    case Phase::kSynchronizing:
      return FeedbackPhase::kSynchronizing;
    case Phase::kActive:
      break;
  }
  for (Side side : {Side::kLeft, Side::kRight}) {
    const auto& binding = plan.side(side);
    if (binding.leader_arm_limb == index && !state.arm_active(side)) {
      return FeedbackPhase::kDeactivatedArm;
    }
  }
  return FeedbackPhase::kNormalActive;
}

SpringParams SetBasePose(const SpringParams& params, const TeleopPlan& plan,
                         std::string_view limb, std::span<const double> q) {
  const std::size_t index = LimbIndex(plan, limb);
  const LimbSpec& spec = plan.leader.limbs[index];
  if (q.size() != spec.joints.size()) {
    throw SchemaMismatch("feedback", "limb '" + spec.name + "' has " +
                                         std::to_string(spec.joints.size()) +
                                         " joints, got " +
                                         std::to_string(q.size()));
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i < index; ++i) {
    start += plan.leader.limbs[i].joints.size();
  }
  SpringParams out = params;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const JointSpec& joint = spec.joints[j];
    if (!(q[j] >= joint.position_min && q[j] <= joint.position_max)) {
      throw LimitViolation("feedback", "base pose for '" + joint.name +
                                           "' outside joint limits");
    }
    out.q_base[start + j] = q[j];
  }
  return out;
}

}  // namespace child
