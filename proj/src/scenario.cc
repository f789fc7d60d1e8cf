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

#include "child/scenario.h"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "child/frame_codec.h"
#include "child/latest_cell.h"

namespace child {
namespace {

namespace fs = std::filesystem;

void RejectUnknown(const YAML::Node& node, const std::string& where,
                   std::initializer_list<std::string_view> known) {
  if (!node.IsMap()) throw ScriptError(where + ": expected a mapping");
  for (const auto& entry : node) {
    const std::string key = entry.first.as<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ScriptError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T Get(const YAML::Node& node, const std::string& key, const std::string& where) {
  const YAML::Node value = node[key];
  if (!value.IsDefined() || value.IsNull()) {
    throw ScriptError(where + ": missing '" + key + "'");
  }
  try {
    return value.as<T>();
  } catch (const YAML::Exception&) {
    throw ScriptError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T GetOr(const YAML::Node& node, const std::string& key, const std::string& where,
        T fallback) {
  const YAML::Node value = node[key];
  if (!value.IsDefined() || value.IsNull()) return fallback;
  return Get<T>(node, key, where);
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::map<std::string, double> ReadDoubleMap(const YAML::Node& node,
                                            const std::string& where) {
  std::map<std::string, double> out;
  if (!node.IsDefined() || node.IsNull()) return out;
  if (!node.IsMap()) throw ScriptError(where + ": expected a mapping");
  for (const auto& entry : node) {
    try {
      out[entry.first.as<std::string>()] = entry.second.as<double>();
    } catch (const YAML::Exception&) {
      throw ScriptError(where + ": values must be numbers");
    }
  }
  return out;
}

std::vector<Window> ReadWindows(const YAML::Node& node, const std::string& where) {
  std::vector<Window> out;
  if (!node.IsDefined() || node.IsNull()) return out;
  if (!node.IsSequence()) throw ScriptError(where + ": expected a list");
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    RejectUnknown(node[i], at, {"from", "to"});
    Window w{Get<double>(node[i], "from", at), Get<double>(node[i], "to", at)};
    if (!(w.to_s > w.from_s)) throw ScriptError(at + ": 'to' must exceed 'from'");
    out.push_back(w);
  }
  return out;
}

std::optional<std::array<double, 2>> ReadRange(const YAML::Node& node,
                                               const std::string& key,
                                               const std::string& where) {
  const YAML::Node value = node[key];
  if (!value.IsDefined() || value.IsNull()) return std::nullopt;
  if (!value.IsSequence() || value.size() != 2) {
    throw ScriptError(where + "." + key + ": expected [min, max]");
  }
  std::array<double, 2> range{value[0].as<double>(), value[1].as<double>()};
  if (range[0] > range[1]) throw ScriptError(where + "." + key + ": min > max");
  return range;
}

Phase ParsePhase(const std::string& text, const std::string& where) {
  for (Phase p : {Phase::kIdle, Phase::kArming, Phase::kSynchronizing,
                  Phase::kActive}) {
    if (ToString(p) == text) return p;
  }
  throw ScriptError(where + ": unknown phase '" + text + "'");
}

SourceSpec ParseSource(const YAML::Node& node, const fs::path& base) {
  const std::string where = "source";
  RejectUnknown(node, where, {"kind", "amplitude", "frequency", "steps", "end",
                              "path", "speed"});
  SourceSpec spec;
  const std::string kind = Get<std::string>(node, "kind", where);
  if (kind == "none") {
    spec.kind = SourceKind::kNone;
  } else if (kind == "hold") {
    spec.kind = SourceKind::kHold;
  } else if (kind == "sine") {
    spec.kind = SourceKind::kSine;
    spec.amplitude = Get<double>(node, "amplitude", where);
    spec.frequency_hz = Get<double>(node, "frequency", where);
  } else if (kind == "script") {
    spec.kind = SourceKind::kScript;
    spec.end_s = GetOr<double>(node, "end", where, -1.0);
    const YAML::Node steps = node["steps"];
    if (!steps.IsSequence()) throw ScriptError("source.steps: expected a list");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const std::string at = "source.steps[" + std::to_string(i) + "]";
      RejectUnknown(steps[i], at, {"at", "ramp", "joints", "grippers", "rpy"});
      ScriptStep step;
      step.at_s = Get<double>(steps[i], "at", at);
      step.ramp_s = GetOr<double>(steps[i], "ramp", at, 0.0);
      step.joints = ReadDoubleMap(steps[i]["joints"], at + ".joints");
      step.grippers = ReadDoubleMap(steps[i]["grippers"], at + ".grippers");
      if (const YAML::Node rpy = steps[i]["rpy"]; rpy.IsDefined()) {
        if (!rpy.IsSequence() || rpy.size() != 3) {
          throw ScriptError(at + ".rpy: expected [roll, pitch, yaw]");
        }
        step.orientation_rpy = {rpy[0].as<double>(), rpy[1].as<double>(),
                                rpy[2].as<double>()};
      }
      spec.steps.push_back(std::move(step));
    }
  } else if (kind == "trace") {
    spec.kind = SourceKind::kTrace;
    spec.trace_path = Resolve(base, Get<std::string>(node, "path", where));
    spec.speed = GetOr<double>(node, "speed", where, 1.0);
  } else {
    throw ScriptError("source.kind: unknown kind '" + kind + "'");
  }
  return spec;
}

ScenarioAssertions ParseAssertions(const YAML::Node& node, const fs::path& base) {
  ScenarioAssertions a;
  if (!node.IsDefined() || node.IsNull()) return a;
  const std::string where = "assert";
  RejectUnknown(node, where,
                {"final_phase", "events", "golden_events", "hold_home",
                 "idle_motion", "base_x", "base_y", "torso_at_home",
                 "base_orientation_tracks_imu"});
  if (node["final_phase"].IsDefined()) {
    a.final_phase = ParsePhase(Get<std::string>(node, "final_phase", where),
                               "assert.final_phase");
  }
  if (node["events"].IsDefined()) {
    a.events = Get<std::vector<std::string>>(node, "events", where);
  }
  if (node["golden_events"].IsDefined()) {
    a.golden_events =
        Resolve(base, Get<std::string>(node, "golden_events", where));
  }
  a.hold_home =
      GetOr<std::vector<std::string>>(node, "hold_home", where, {});
  if (node["idle_motion"].IsDefined()) {
    a.idle_motion = Get<bool>(node, "idle_motion", where);
  }
  a.base_x = ReadRange(node, "base_x", where);
  a.base_y = ReadRange(node, "base_y", where);
  a.torso_at_home = GetOr<bool>(node, "torso_at_home", where, false);
  a.base_orientation_tracks_imu =
      GetOr<bool>(node, "base_orientation_tracks_imu", where, false);
  return a;
}

std::string EventLabel(const GestureEvent& e) {
  std::string label(ToString(e.kind));
  if (e.side) label += " " + std::string(ToString(*e.side));
  return label;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::unique_ptr<LeaderSource> MakeSource(const SourceSpec& spec,
                                         const DeviceConfig& leader) {
  const LeaderSchema schema = LeaderSchema::FromConfig(leader);
  switch (spec.kind) {
    case SourceKind::kNone:
      return nullptr;
    case SourceKind::kHold:
      return std::make_unique<HoldSource>(HoldSource::AtHome(schema));
    case SourceKind::kSine:
      return std::make_unique<SineSweepSource>(schema, spec.amplitude,
                                               spec.frequency_hz);
    case SourceKind::kScript:
      return std::make_unique<GestureScriptSource>(schema, spec.steps,
                                                   spec.end_s);
    case SourceKind::kTrace: {
      Trace trace = ReadTrace(spec.trace_path.string());
      if (trace.samples.empty()) return nullptr;
      if (trace.header.joint_names != schema.JointNames() ||
          trace.header.n_grippers != schema.grippers.size()) {
        throw ScriptError("trace '" + spec.trace_path.string() +
                          "' does not match the leader schema");
      }
      return std::make_unique<ReplaySource>(std::move(trace), spec.speed);
    }
  }
  return nullptr;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("scenario", "cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Records each distinct failure once, with the tick it first occurred.
class FailureLog {
 public:
  explicit FailureLog(std::vector<std::string>& out) : out_(out) {}
  void Add(const std::string& key, double t_s, const std::string& detail) {
    if (!seen_.insert(key).second) return;
    out_.push_back("t=" + FormatDouble(t_s) + "s: " + detail);
  }

 private:
  std::vector<std::string>& out_;
  std::set<std::string> seen_;
};

}  // namespace

Scenario ParseScenario(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScriptError(std::string("malformed document: ") + e.what());
  }
  RejectUnknown(root, "scenario",
                {"name", "leader", "follower", "rate_hz", "duration", "source",
                 "follower_start", "dropouts", "corrupt", "assert"});
  Scenario s;
  s.name = Get<std::string>(root, "name", "scenario");
  s.leader_path = Resolve(base_dir, Get<std::string>(root, "leader", "scenario"));
  s.follower_path =
      Resolve(base_dir, Get<std::string>(root, "follower", "scenario"));
  s.rate_hz = GetOr<double>(root, "rate_hz", "scenario", 100.0);
  s.duration_s = Get<double>(root, "duration", "scenario");
  if (!(s.rate_hz >= 10.0 && s.rate_hz <= 1000.0)) {
    throw ScriptError("rate_hz must be in [10, 1000]");
  }
  if (!(s.duration_s >= 0.0 && s.duration_s <= 3600.0)) {
    throw ScriptError("duration must be in [0, 3600] s");
  }
  if (!root["source"].IsDefined()) throw ScriptError("scenario: missing 'source'");
  s.source = ParseSource(root["source"], base_dir);
  s.follower_start = ReadDoubleMap(root["follower_start"], "follower_start");
  s.dropouts = ReadWindows(root["dropouts"], "dropouts");
  s.corrupt = ReadWindows(root["corrupt"], "corrupt");
  s.assertions = ParseAssertions(root["assert"], base_dir);
  return s;
}

Scenario LoadScenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ScriptError("cannot open scenario '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseScenario(buffer.str(), path.parent_path());
}

std::string ScenarioReport::Summary() const {
  std::string out = "scenario " + name + ": " + (passed() ? "PASS" : "FAIL") +
                    " (" + std::to_string(ticks) + " ticks, " +
                    std::to_string(events.size()) + " events, final phase " +
                    std::string(ToString(final_state.phase)) + ", base x=" +
                    FormatDouble(final_follower.base.x) +
                    " y=" + FormatDouble(final_follower.base.y) + ")\n";
  for (const std::string& f : failures) out += "  assertion failed: " + f + "\n";
  return out;
}

ScenarioReport RunScenario(const Scenario& scenario) {
  const auto wall_start = std::chrono::steady_clock::now();
  const TeleopPlan plan =
      MakePlan(LoadConfigFile(scenario.leader_path.string()),
               LoadConfigFile(scenario.follower_path.string()));
  std::unique_ptr<LeaderSource> source = MakeSource(scenario.source, plan.leader);

  ScenarioReport report;
  report.name = scenario.name;
  FailureLog failures(report.failures);
  const ScenarioAssertions& asserts = scenario.assertions;

  std::map<std::string, std::size_t> follower_index;
  for (std::size_t i = 0; i < plan.follower_joints.size(); ++i) {
    follower_index[plan.follower_joints[i].name] = i;
  }
  std::vector<std::size_t> pinned;
  for (const std::string& name : asserts.hold_home) {
    auto it = follower_index.find(name);
    if (it == follower_index.end()) {
      throw ScriptError("assert.hold_home: unknown follower joint '" + name + "'");
    }
    pinned.push_back(it->second);
  }
  if (asserts.torso_at_home) {
    if (!plan.torso) throw ScriptError("assert.torso_at_home: no torso joints");
    pinned.insert(pinned.end(), plan.torso->begin(), plan.torso->end());
  }

  FollowerState follower = InitialFollowerState(plan.follower);
  for (const auto& [name, q] : scenario.follower_start) {
    auto it = follower_index.find(name);
    if (it == follower_index.end()) {
      throw ScriptError("follower_start: unknown joint '" + name + "'");
    }
    const JointSpec& joint = plan.follower_joints[it->second];
    if (q < joint.position_min || q > joint.position_max) {
      throw ScriptError("follower_start: '" + name + "' outside its limits");
    }
    follower.joints[it->second] = q;
  }
  const TrackingParams tracking = TrackingParams::FromConfig(plan.follower);
  SessionState session = InitialSessionState(plan);
  LatestFrameCell cell;

  const double dt = 1.0 / scenario.rate_hz;
  const auto ticks =
      static_cast<std::uint64_t>(std::llround(scenario.duration_s * scenario.rate_hz));
  const auto timeout_ns = static_cast<std::int64_t>(
      std::llround(plan.follower.session.staleness_timeout_s * 1e9));

  std::string& traj = report.trajectory_log;
  traj = "# time_ns phase base_x base_y heading vx vy wz";
  for (const JointSpec& j : plan.follower_joints) traj += " " + j.name;
  traj += "\n";

  bool moved_in_idle = false;
  std::uint64_t imu_checks = 0;
  std::vector<std::uint8_t> bytes;
  for (std::uint64_t k = 0; k < ticks; ++k) {
    const double t_s = static_cast<double>(k) * dt;
    const auto t_ns = static_cast<std::int64_t>(std::llround(t_s * 1e9));
    std::optional<StateFrame> sent;
    if (source) {
      StateFrame frame = source->Sample(t_ns);
      frame.seq = k + 1;
      frame.stamp_ns = t_ns;
      sent = frame;
      bool lost = false;
      for (const Window& w : scenario.dropouts) lost = lost || w.Contains(t_s);
      if (lost) {
        ++report.dropped_frames;
      } else {
        EncodeFrameInto(frame, bytes);
        for (const Window& w : scenario.corrupt) {
          if (w.Contains(t_s)) bytes[bytes.size() / 2] ^= 0x10;
        }
        DecodeResult decoded = DecodeFrame(bytes);
        if (decoded.ok()) {
          cell.Offer(std::move(decoded.frame), t_ns);
        } else {
          cell.CountMalformed();
          ++report.malformed_frames;
        }
      }
    }
    const auto latest = cell.Latest();
    const bool stale = cell.Stale(t_ns, timeout_ns);
    const LeaderInput input{latest ? &latest->frame : nullptr, stale};

    const FollowerState before = follower;
    StepResult step = Step(session, input, follower, dt, plan);
    session = std::move(step.state);
    follower = StepFollower(follower, step.commands, dt, tracking);
    const CommandSet& cmd = step.commands;

    for (std::size_t i = 0; i < follower.joints.size(); ++i) {
      const JointSpec& joint = plan.follower_joints[i];
      if (follower.joints[i] < joint.position_min ||
          follower.joints[i] > joint.position_max) {
        failures.Add("limit:" + joint.name, t_s,
                     "joint '" + joint.name + "' left its limits");
      }
    }
    if (session.phase == Phase::kIdle || session.phase == Phase::kArming) {
      if (cmd.joint_targets || !cmd.velocity.IsZero()) {
        failures.Add("idle_command", t_s, "command emitted while Idle");
      }
      if (follower.joints != before.joints || !(follower.base == before.base)) {
        moved_in_idle = true;
      }
    }
    const bool engaged = session.left_leg_joystick || session.right_leg_joystick;
    if ((!engaged || stale) && !cmd.velocity.IsZero()) {
      failures.Add("zero_velocity", t_s,
                   "nonzero velocity without an engaged leg or on a stale link");
    }
    for (std::size_t idx : pinned) {
      if (follower.joints[idx] != plan.follower_joints[idx].home_position) {
        failures.Add("home:" + plan.follower_joints[idx].name, t_s,
                     "joint '" + plan.follower_joints[idx].name +
                         "' moved away from home");
      }
    }
    if (asserts.base_orientation_tracks_imu && session.phase == Phase::kActive &&
        !cmd.hold && input.frame) {
      ++imu_checks;
      const Quaternion want = Quaternion::FromFrame(input.frame->orientation);
      const Quaternion& got = follower.base_orientation;
      const double err = std::max({std::abs(want.w - got.w), std::abs(want.x - got.x),
                                   std::abs(want.y - got.y), std::abs(want.z - got.z)});
      if (err > 1e-6) {
        failures.Add("imu", t_s, "base orientation does not follow the IMU");
      }
    }

    for (const GestureEvent& e : step.events) {
      report.event_log += e.ToLogLine() + "\n";
      report.events.push_back(e);
    }
    traj += std::to_string(session.time_ns) + " " +
            std::string(ToString(session.phase)) + " " +
            FormatDouble(follower.base.x) + " " + FormatDouble(follower.base.y) +
            " " + FormatDouble(follower.base.heading) + " " +
            FormatDouble(cmd.velocity.vx) + " " + FormatDouble(cmd.velocity.vy) +
            " " + FormatDouble(cmd.velocity.wz);
    for (double q : follower.joints) traj += " " + FormatDouble(q);
    traj += "\n";
  }
  report.ticks = ticks;

  const bool expect_idle_motion = asserts.idle_motion.value_or(false);
  if (moved_in_idle != expect_idle_motion) {
    report.failures.push_back(expect_idle_motion
                                  ? "expected motion while Idle, none observed"
                                  : "follower moved while Idle");
  }
  if (asserts.base_orientation_tracks_imu && imu_checks == 0) {
    report.failures.push_back("base orientation never checked: no Active ticks");
  }
  if (asserts.final_phase && session.phase != *asserts.final_phase) {
    report.failures.push_back("final phase " + std::string(ToString(session.phase)) +
                              ", expected " +
                              std::string(ToString(*asserts.final_phase)));
  }
  if (asserts.events) {
    std::vector<std::string> got;
    for (const GestureEvent& e : report.events) got.push_back(EventLabel(e));
    if (got != *asserts.events) {
      std::string text;
      for (const std::string& label : got) text += (text.empty() ? "" : ", ") + label;
      report.failures.push_back("event sequence was [" + text + "]");
    }
  }
  if (asserts.golden_events) {
    if (!fs::exists(*asserts.golden_events)) {
      report.failures.push_back("golden '" + asserts.golden_events->string() +
                                "' is missing");
    } else if (ReadFile(*asserts.golden_events) != report.event_log) {
      report.failures.push_back("event log differs from golden '" +
                                asserts.golden_events->string() + "'");
    }
  }
  auto check_range = [&](const std::optional<std::array<double, 2>>& range,
                         double value, const char* label) {
    if (range && (value < (*range)[0] || value > (*range)[1])) {
      report.failures.push_back(std::string(label) + " = " + FormatDouble(value) +
                                " outside [" + FormatDouble((*range)[0]) + ", " +
                                FormatDouble((*range)[1]) + "]");
    }
  };
  check_range(asserts.base_x, follower.base.x, "base_x");
  check_range(asserts.base_y, follower.base.y, "base_y");

  report.final_state = std::move(session);
  report.final_follower = std::move(follower);
  report.wall_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - wall_start)
                      .count();
  return report;
}

void WriteScenarioLogs(const ScenarioReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [ext, text] :
       {std::pair{".events", &report.event_log},
        std::pair{".traj", &report.trajectory_log}}) {
    const fs::path path = dir / (report.name + ext);
    std::ofstream out(path, std::ios::binary);
    out << *text;
    if (!out) throw Error("scenario", "cannot write '" + path.string() + "'");
  }
}

}  // namespace child
