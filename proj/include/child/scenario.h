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

#ifndef CHILD_SCENARIO_H_
#define CHILD_SCENARIO_H_

// Scripted end-to-end runs. A scenario drives a leader source through the
// wire codec, the latest-value cell, the session and the simulated follower
// on a virtual clock, checks assertions on every tick, and writes an event
// log and a trajectory log.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "child/config.h"
#include "child/error.h"
#include "child/follower_sim.h"
#include "child/leader_source.h"
#include "child/session.h"

namespace child {

class ScriptError : public Error {
 public:
  explicit ScriptError(const std::string& message)
      : Error("scenario", "ScriptError: " + message) {}
};

enum class SourceKind { kNone, kHold, kSine, kScript, kTrace };

struct SourceSpec {
  SourceKind kind = SourceKind::kNone;
  double amplitude = 0.0;     // sine
  double frequency_hz = 0.0;  // sine
  std::vector<ScriptStep> steps;
  double end_s = -1.0;        // script
  std::filesystem::path trace_path;
  double speed = 1.0;         // trace
};

// Closed interval on the virtual clock, seconds.
struct Window {
  double from_s = 0.0;
  double to_s = 0.0;
  bool Contains(double t_s) const { return t_s >= from_s && t_s < to_s; }
};

struct ScenarioAssertions {
  std::optional<Phase> final_phase;
  // "Kind" or "Kind side", in order, stamps ignored.
  std::optional<std::vector<std::string>> events;
  std::optional<std::filesystem::path> golden_events;
  std::vector<std::string> hold_home;  // follower joints pinned at home
  // Whether the follower may move while the session is Idle or Arming.
  std::optional<bool> idle_motion;
  std::optional<std::array<double, 2>> base_x;
  std::optional<std::array<double, 2>> base_y;
  bool torso_at_home = false;
  bool base_orientation_tracks_imu = false;
};

struct Scenario {
  std::string name;
  std::filesystem::path leader_path;
  std::filesystem::path follower_path;
  double rate_hz = 100.0;
  double duration_s = 0.0;
  SourceSpec source;
  std::map<std::string, double> follower_start;
  std::vector<Window> dropouts;  // frames lost in transit
  std::vector<Window> corrupt;   // frames arrive with a flipped bit
  ScenarioAssertions assertions;
};

// Relative paths resolve against base_dir. Throws ScriptError.
Scenario ParseScenario(const std::string& text,
                       const std::filesystem::path& base_dir);
Scenario LoadScenario(const std::filesystem::path& path);

struct ScenarioReport {
  std::string name;
  std::uint64_t ticks = 0;
  std::vector<GestureEvent> events;
  std::vector<std::string> failures;
  SessionState final_state;
  FollowerState final_follower;
  std::uint64_t dropped_frames = 0;
  std::uint64_t malformed_frames = 0;
  std::string event_log;       // one ToLogLine() per event, '\n' terminated
  std::string trajectory_log;  // see docs/scenario_format.md
  double wall_s = 0.0;

  bool passed() const { return failures.empty(); }
  std::string Summary() const;
};

// Throws Error for configs or traces that cannot be loaded; assertion
// failures are reported, not thrown.
ScenarioReport RunScenario(const Scenario& scenario);

// Writes <dir>/<name>.events and <dir>/<name>.traj.
void WriteScenarioLogs(const ScenarioReport& report,
                       const std::filesystem::path& dir);

}  // namespace child

#endif  // CHILD_SCENARIO_H_
