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

#ifndef CHILD_FEEDBACK_H_
#define CHILD_FEEDBACK_H_

// Leader force feedback: a per-joint virtual spring toward a base pose,
// scaled by a multiplier that depends on the session phase of the limb.
// Deactivated arms get the stiffest spring so the operator can put the arm
// back where it was before handing control to the leg joystick.

#include <span>
#include <string_view>
#include <vector>

#include "child/config.h"
#include "child/error.h"
#include "child/session.h"

namespace child {

enum class FeedbackPhase { kIdle, kSynchronizing, kNormalActive, kDeactivatedArm };
std::string_view ToString(FeedbackPhase phase);

double Multiplier(const GainSchedule& schedule, FeedbackPhase phase);

struct SpringParams {
  std::vector<double> k;       // N*m/rad, leader joint order
  std::vector<double> q_base;  // rad

  bool operator==(const SpringParams&) const = default;
};

// Stiffness from the leader's gain schedule, base at the home pose.
SpringParams DefaultSpringParams(const DeviceConfig& leader);

class UnknownLimb : public Error {
 public:
  explicit UnknownLimb(const std::string& limb)
      : Error("feedback", "UnknownLimb: '" + limb + "'") {}
};

// Restoring torque tau_i = -m(phase) * k_i * (q_i - q_base_i), each clamped
// to +-tau_max. Throws SchemaMismatch on length mismatch.
std::vector<double> BiasTorque(std::span<const double> q,
                               const SpringParams& params, FeedbackPhase phase,
                               const GainSchedule& schedule);

// Same, with a phase per joint.
std::vector<double> BiasTorque(std::span<const double> q,
                               const SpringParams& params,
                               std::span<const FeedbackPhase> phases,
                               const GainSchedule& schedule);

FeedbackPhase PhaseOf(const SessionState& state, const TeleopPlan& plan,
                      std::string_view limb);

// Replaces q_base for the joints of one leader limb. Throws UnknownLimb,
// SchemaMismatch, or LimitViolation if q leaves the joint limits.
SpringParams SetBasePose(const SpringParams& params, const TeleopPlan& plan,
                         std::string_view limb, std::span<const double> q);

}  // namespace child

#endif  // CHILD_FEEDBACK_H_
