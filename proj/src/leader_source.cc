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

#include "child/leader_source.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <numbers>
#include <sstream>

#include "child/retarget.h"

namespace child {
namespace {

constexpr double kNsPerS = 1e9;
// Backward-difference step for script velocities.
constexpr double kVelocityStepS = 1e-3;

void CheckPose(const LeaderSchema& schema, const std::vector<double>& pose,
               const char* what) {
  if (pose.size() != schema.joints.size()) {
    throw SchemaMismatch("leader_source",
                         std::string(what) + " has " +
                             std::to_string(pose.size()) + " joints, schema " +
                             std::to_string(schema.joints.size()));
  }
  for (std::size_t i = 0; i < pose.size(); ++i) {
    const JointSpec& joint = schema.joints[i];
    if (!(pose[i] >= joint.position_min && pose[i] <= joint.position_max)) {
      throw LimitViolation("leader_source",
                           std::string(what) + ": joint '" + joint.name +
                               "' value " + std::to_string(pose[i]) +
                               " outside limits");
    }
  }
}

StateFrame BlankFrame(std::size_t n_joints, std::size_t n_grippers) {
  StateFrame frame;
  frame.joint_positions.assign(n_joints, 0.0f);
  frame.joint_velocities.assign(n_joints, 0.0f);
  frame.gripper_triggers.assign(n_grippers, 0.0f);
  return frame;
}

std::string FormatDouble(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

LeaderSchema LeaderSchema::FromConfig(const DeviceConfig& leader) {
  LeaderSchema schema;
  schema.joints = leader.FlatJoints();
  for (const LimbSpec* limb : leader.GripperLimbs()) {
    schema.grippers.push_back(limb->name);
  }
  return schema;
}

std::vector<std::string> LeaderSchema::JointNames() const {
  std::vector<std::string> names;
  for (const JointSpec& joint : joints) names.push_back(joint.name);
  return names;
}

// --- HoldSource --------------------------------------------------------------

HoldSource::HoldSource(const LeaderSchema& schema, std::vector<double> pose)
    : pose_(std::move(pose)), grippers_(schema.grippers.size()) {
  CheckPose(schema, pose_, "hold pose");
}

HoldSource HoldSource::AtHome(const LeaderSchema& schema) {
  std::vector<double> home;
  for (const JointSpec& joint : schema.joints) {
    home.push_back(joint.home_position);
  }
  return HoldSource(schema, std::move(home));
}

StateFrame HoldSource::Sample(std::int64_t) {
  StateFrame frame = BlankFrame(pose_.size(), grippers_);
  for (std::size_t i = 0; i < pose_.size(); ++i) {
    frame.joint_positions[i] = static_cast<float>(pose_[i]);
  }
  return frame;
}

// --- SineSweepSource -----------------------------------------------------------

SineSweepSource::SineSweepSource(const LeaderSchema& schema, double amplitude,
                                 double frequency_hz)
    : grippers_(schema.grippers.size()),
      amplitude_(amplitude),
      frequency_hz_(frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(amplitude)) {
    throw Error("leader_source", "sine sweep needs frequency > 0");
  }
  std::vector<double> low, high;
  for (const JointSpec& joint : schema.joints) {
    home_.push_back(joint.home_position);
    low.push_back(joint.home_position - std::abs(amplitude));
    high.push_back(joint.home_position + std::abs(amplitude));
  }
  CheckPose(schema, low, "sine sweep");
  CheckPose(schema, high, "sine sweep");
}

StateFrame SineSweepSource::Sample(std::int64_t t_ns) {
  const double omega = 2.0 * std::numbers::pi * frequency_hz_;
  const double t = static_cast<double>(t_ns) / kNsPerS;
  StateFrame frame = BlankFrame(home_.size(), grippers_);
  for (std::size_t i = 0; i < home_.size(); ++i) {
    frame.joint_positions[i] =
        static_cast<float>(home_[i] + amplitude_ * std::sin(omega * t));
    frame.joint_velocities[i] =
        static_cast<float>(amplitude_ * omega * std::cos(omega * t));
  }
  return frame;
}

// --- GestureScriptSource -------------------------------------------------------

GestureScriptSource::GestureScriptSource(const LeaderSchema& schema,
                                         std::vector<ScriptStep> steps,
                                         double end_s)
    : schema_(schema),
      n_channels_(schema.joints.size() + schema.grippers.size() + 3),
      channel_steps_(n_channels_),
      end_s_(end_s) {
  for (const JointSpec& joint : schema_.joints) {
    base_.push_back(joint.home_position);
  }
  base_.resize(n_channels_, 0.0);

  std::stable_sort(steps.begin(), steps.end(),
                   [](const ScriptStep& a, const ScriptStep& b) {
                     return a.at_s < b.at_s;
                   });
  const std::size_t gripper_base = schema_.joints.size();
  const std::size_t rpy_base = gripper_base + schema_.grippers.size();
  for (const ScriptStep& step : steps) {
    if (!(step.at_s >= 0.0) || !(step.ramp_s >= 0.0)) {
      throw Error("leader_source", "script step needs at >= 0 and ramp >= 0");
    }
    for (const auto& [name, value] : step.joints) {
      auto it = std::find_if(
          schema_.joints.begin(), schema_.joints.end(),
          [&](const JointSpec& joint) { return joint.name == name; });
      if (it == schema_.joints.end()) {
        throw Error("leader_source", "script names unknown joint '" + name + "'");
      }
      if (!(value >= it->position_min && value <= it->position_max)) {
        throw LimitViolation("leader_source", "script target for '" + name +
                                                  "' outside limits");
      }
      channel_steps_[static_cast<std::size_t>(it - schema_.joints.begin())]
          .push_back({step.at_s, step.ramp_s, value});
    }
    for (const auto& [name, value] : step.grippers) {
      auto it = std::find(schema_.grippers.begin(), schema_.grippers.end(), name);
      if (it == schema_.grippers.end()) {
        throw Error("leader_source",
                    "script names unknown gripper limb '" + name + "'");
      }
      if (!(value >= 0.0 && value <= 1.0)) {
        throw LimitViolation("leader_source", "trigger for '" + name +
                                                  "' outside [0, 1]");
      }
      channel_steps_[gripper_base +
                     static_cast<std::size_t>(it - schema_.grippers.begin())]
          .push_back({step.at_s, step.ramp_s, value});
    }
    if (step.orientation_rpy) {
      for (std::size_t a = 0; a < 3; ++a) {
        channel_steps_[rpy_base + a].push_back(
            {step.at_s, step.ramp_s, (*step.orientation_rpy)[a]});
      }
    }
  }
}

std::vector<double> GestureScriptSource::Evaluate(double t_s) const {
  std::vector<double> values(n_channels_);
  for (std::size_t c = 0; c < n_channels_; ++c) {
    double from = base_[c], to = base_[c], at = 0.0, ramp = 0.0;
    auto eval = [&](double t) {
      if (ramp <= 0.0 || t >= at + ramp) return to;
      return from + (to - from) * ((t - at) / ramp);
    };
    for (const auto& [step_at, step_ramp, target] : channel_steps_[c]) {
      if (step_at > t_s) break;
      from = eval(step_at);
      to = target;
      at = step_at;
      ramp = step_ramp;
    }
    values[c] = eval(t_s);
  }
  return values;
}

StateFrame GestureScriptSource::Sample(std::int64_t t_ns) {
  const double t = static_cast<double>(t_ns) / kNsPerS;
  const std::vector<double> now = Evaluate(t);
  const std::vector<double> before = Evaluate(std::max(0.0, t - kVelocityStepS));
  const std::size_t n = schema_.joints.size();
  const std::size_t g = schema_.grippers.size();
  StateFrame frame = BlankFrame(n, g);
  const double h = t > 0.0 ? std::min(t, kVelocityStepS) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    frame.joint_positions[i] = static_cast<float>(now[i]);
    frame.joint_velocities[i] =
        h > 0.0 ? static_cast<float>((now[i] - before[i]) / h) : 0.0f;
  }
  for (std::size_t i = 0; i < g; ++i) {
    frame.gripper_triggers[i] = static_cast<float>(now[n + i]);
  }
  const Quaternion q =
      EulerToQuat({now[n + g], now[n + g + 1], now[n + g + 2]});
  frame.orientation = q.ToFrame();
  return frame;
}

bool GestureScriptSource::Finished(std::int64_t t_ns) const {
  return end_s_ >= 0.0 && static_cast<double>(t_ns) / kNsPerS >= end_s_;
}

// --- Traces ------------------------------------------------------------------

std::string ConfigFingerprint(const DeviceConfig& config) {
  const std::string text = SerializeConfig(config);
  const std::uint32_t crc = Crc32(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%08x", crc);
  return buffer;
}

TraceHeader MakeTraceHeader(const DeviceConfig& leader, double rate_hz) {
  TraceHeader header;
  header.fingerprint = ConfigFingerprint(leader);
  header.rate_hz = rate_hz;
  header.joint_names = leader.JointNames();
  header.n_grippers = leader.GripperLimbs().size();
  return header;
}

namespace {

std::string FormatHeader(const TraceHeader& header) {
  std::string names;
  for (const std::string& name : header.joint_names) {
    if (name.find_first_of(", \t\n") != std::string::npos) {
      throw IoError("joint name '" + name + "' cannot be stored in a trace");
    }
    if (!names.empty()) names += ",";
    names += name;
  }
  return "CHTRACE 1 fingerprint=" + header.fingerprint +
         " rate_hz=" + FormatDouble(header.rate_hz) +
         " grippers=" + std::to_string(header.n_grippers) +
         " joints=" + std::to_string(header.joint_names.size()) +
         " names=" + names + "\n";
}

TraceHeader ParseHeader(const std::string& line) {
  std::istringstream in(line);
  std::string magic, version;
  in >> magic >> version;
  if (magic != "CHTRACE" || version != "1") {
    throw IoError("not a CHTRACE v1 file");
  }
  TraceHeader header;
  std::size_t n_joints = 0;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw IoError("bad header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "fingerprint") {
        header.fingerprint = value;
      } else if (key == "rate_hz") {
        header.rate_hz = std::stod(value);
      } else if (key == "grippers") {
        header.n_grippers = std::stoul(value);
      } else if (key == "joints") {
        n_joints = std::stoul(value);
      } else if (key == "names") {
        std::istringstream names(value);
        std::string name;
        while (std::getline(names, name, ',')) header.joint_names.push_back(name);
      }
    } catch (const std::exception&) {
      throw IoError("bad header value for '" + key + "'");
    }
  }
  if (header.joint_names.size() != n_joints) {
    throw IoError("header joint count disagrees with names");
  }
  return header;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path, TraceHeader header)
    : header_(std::move(header)),
      out_(std::make_unique<std::ofstream>(path, std::ios::binary)) {
  if (!*out_) throw IoError("cannot open '" + path + "' for writing");
  const std::string line = FormatHeader(header_);
  out_->write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!*out_) throw IoError("write failed for '" + path + "'");
}

void TraceWriter::Append(const StateFrame& frame) {
  if (frame.joint_positions.size() != header_.joint_names.size() ||
      frame.gripper_triggers.size() != header_.n_grippers) {
    throw SchemaMismatch("leader_source", "frame does not fit trace schema");
  }
  if (last_stamp_ && frame.stamp_ns <= *last_stamp_) {
    throw Error("leader_source", "trace timestamps must increase");
  }
  EncodeFrameInto(frame, buffer_);
  out_->write(reinterpret_cast<const char*>(buffer_.data()),
              static_cast<std::streamsize>(buffer_.size()));
  if (!*out_) throw IoError("trace write failed");
  last_stamp_ = frame.stamp_ns;
  ++count_;
}

void TraceWriter::Flush() { out_->flush(); }

Trace ReadTrace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trace file '" + path + "'");
  Trace trace;
  trace.header = ParseHeader(line);
  const std::vector<std::uint8_t> body((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  const std::size_t frame_size = EncodedFrameSize(
      trace.header.joint_names.size(), trace.header.n_grippers);
  if (body.size() % frame_size != 0) {
    throw IoError("trace body is not a whole number of frames");
  }
  for (std::size_t offset = 0; offset < body.size(); offset += frame_size) {
    DecodeResult result = DecodeFrame(
        std::span<const std::uint8_t>(body).subspan(offset, frame_size));
    if (!result.ok()) {
      throw IoError("frame " + std::to_string(offset / frame_size) + ": " +
                    std::string(ToString(result.status)));
    }
    TraceSample sample;
    sample.t_ns = result.frame.stamp_ns;
    sample.positions = std::move(result.frame.joint_positions);
    sample.triggers = std::move(result.frame.gripper_triggers);
    sample.orientation = result.frame.orientation;
    if (!trace.samples.empty() && sample.t_ns <= trace.samples.back().t_ns) {
      throw IoError("trace timestamps are not strictly increasing");
    }
    trace.samples.push_back(std::move(sample));
  }
  return trace;
}

Trace Record(LeaderSource& source, const DeviceConfig& leader,
             const std::string& path, double rate_hz, std::size_t n_samples) {
  if (!(rate_hz > 0.0)) throw Error("leader_source", "rate_hz must be > 0");
  TraceHeader header = MakeTraceHeader(leader, rate_hz);
  if (source.joint_count() != header.joint_names.size() ||
      source.gripper_count() != header.n_grippers) {
    throw SchemaMismatch(
        "leader_source",
        "provider has " + std::to_string(source.joint_count()) + " joints / " +
            std::to_string(source.gripper_count()) + " grippers, config has " +
            std::to_string(header.joint_names.size()) + " / " +
            std::to_string(header.n_grippers));
  }
  TraceWriter writer(path, header);
  Trace trace{header, {}};
  const double period_ns = kNsPerS / rate_hz;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const auto t_ns = static_cast<std::int64_t>(std::llround(k * period_ns));
    StateFrame frame = source.Sample(t_ns);
    frame.seq = k + 1;
    frame.stamp_ns = t_ns;
    writer.Append(frame);
    trace.samples.push_back(
        {t_ns, frame.joint_positions, frame.gripper_triggers, frame.orientation});
    if (source.Finished(t_ns)) break;
  }
  writer.Flush();
  return trace;
}

// --- RecordingSource -----------------------------------------------------------

RecordingSource::RecordingSource(LeaderSource& inner, const DeviceConfig& leader,
                                 const std::string& path, double rate_hz)
    : inner_(inner) {
  TraceHeader header = MakeTraceHeader(leader, rate_hz);
  if (inner.joint_count() != header.joint_names.size() ||
      inner.gripper_count() != header.n_grippers) {
    throw SchemaMismatch("leader_source",
                         "recorded source does not match the leader config");
  }
  writer_ = std::make_unique<TraceWriter>(path, std::move(header));
}

RecordingSource::~RecordingSource() { writer_->Flush(); }

StateFrame RecordingSource::Sample(std::int64_t t_ns) {
  StateFrame frame = inner_.Sample(t_ns);
  frame.seq = ++seq_;
  frame.stamp_ns = t_ns;
  writer_->Append(frame);
  return frame;
}

// --- ReplaySource --------------------------------------------------------------

ReplaySource::ReplaySource(Trace trace, double speed)
    : trace_(std::move(trace)), speed_(speed) {
  if (trace_.samples.empty()) throw EmptyTrace();
  if (!(speed > 0.0)) throw Error("leader_source", "replay speed must be > 0");
}

std::size_t ReplaySource::IndexAt(std::int64_t t_ns) const {
  const std::int64_t t0 = trace_.samples.front().t_ns;
  const double trace_t = static_cast<double>(t_ns) * speed_ + 0.5;
  auto it = std::upper_bound(
      trace_.samples.begin(), trace_.samples.end(), trace_t,
      [t0](double t, const TraceSample& s) {
        return t < static_cast<double>(s.t_ns - t0);
      });
  return it == trace_.samples.begin()
             ? 0
             : static_cast<std::size_t>(it - trace_.samples.begin()) - 1;
}

StateFrame ReplaySource::Sample(std::int64_t t_ns) {
  const std::size_t i = IndexAt(t_ns);
  const TraceSample& s = trace_.samples[i];
  StateFrame frame;
  frame.joint_positions = s.positions;
  frame.gripper_triggers = s.triggers;
  frame.orientation = s.orientation;
  frame.joint_velocities.assign(s.positions.size(), 0.0f);
  if (i > 0) {
    const TraceSample& prev = trace_.samples[i - 1];
    const double dt_s =
        static_cast<double>(s.t_ns - prev.t_ns) / kNsPerS / speed_;
    for (std::size_t j = 0; j < s.positions.size(); ++j) {
      frame.joint_velocities[j] =
          static_cast<float>((s.positions[j] - prev.positions[j]) / dt_s);
    }
  }
  return frame;
}

bool ReplaySource::Finished(std::int64_t t_ns) const {
  const std::int64_t span =
      trace_.samples.back().t_ns - trace_.samples.front().t_ns;
  return static_cast<double>(t_ns) * speed_ + 0.5 >= static_cast<double>(span);
}

std::size_t ReplaySource::joint_count() const {
  return trace_.header.joint_names.size();
}

std::size_t ReplaySource::gripper_count() const {
  return trace_.header.n_grippers;
}

}  // namespace child
