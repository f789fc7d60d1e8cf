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

#ifndef CHILD_LEADER_SOURCE_H_
#define CHILD_LEADER_SOURCE_H_

// Leader state providers. A provider answers "what does the leader look
// like t nanoseconds after the stream started"; the publish loop and the
// scenario runner call it once per tick. Hardware drivers for a physical
// leader device would implement the same interface.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "child/config.h"
#include "child/error.h"
#include "child/frame_codec.h"

namespace child {

// Joint order and limits of the leader, plus its gripper limbs.
struct LeaderSchema {
  std::vector<JointSpec> joints;
  std::vector<std::string> grippers;  // limb names, trigger order

  static LeaderSchema FromConfig(const DeviceConfig& leader);
  std::vector<std::string> JointNames() const;
};

class LeaderSource {
 public:
  virtual ~LeaderSource() = default;

  // Positions, velocities, triggers and orientation at t_ns. seq and
  // stamp_ns are left for the caller.
  virtual StateFrame Sample(std::int64_t t_ns) = 0;
  // True once the stream has nothing new to say after t_ns.
  virtual bool Finished(std::int64_t t_ns) const {
    (void)t_ns;
    return false;
  }
  virtual std::size_t joint_count() const = 0;
  virtual std::size_t gripper_count() const = 0;
};

// --- Synthetic providers -------------------------------------------------

class HoldSource : public LeaderSource {
 public:
  // Throws LimitViolation if the pose leaves the joint limits.
  HoldSource(const LeaderSchema& schema, std::vector<double> pose);
  static HoldSource AtHome(const LeaderSchema& schema);

  StateFrame Sample(std::int64_t t_ns) override;
  std::size_t joint_count() const override { return pose_.size(); }
  std::size_t gripper_count() const override { return grippers_; }

 private:
  std::vector<double> pose_;
  std::size_t grippers_;
};

// q_i(t) = home_i + amplitude * sin(2 pi f t) on every joint.
class SineSweepSource : public LeaderSource {
 public:
  // Throws LimitViolation if home +- amplitude leaves any joint's limits.
  SineSweepSource(const LeaderSchema& schema, double amplitude,
                  double frequency_hz);

  StateFrame Sample(std::int64_t t_ns) override;
  std::size_t joint_count() const override { return home_.size(); }
  std::size_t gripper_count() const override { return grippers_; }

 private:
  std::vector<double> home_;
  std::size_t grippers_;
  double amplitude_;
  double frequency_hz_;
};

// One timed change in a gesture script. Each named channel ramps linearly
// from its value at `at_s` to the target over `ramp_s` (0 = step).
struct ScriptStep {
  double at_s = 0.0;
  double ramp_s = 0.0;
  std::map<std::string, double> joints;    // joint name -> rad
  std::map<std::string, double> grippers;  // gripper limb name -> [0, 1]
  // Torso orientation as intrinsic Z-Y-X roll/pitch/yaw in radians.
  std::optional<std::array<double, 3>> orientation_rpy;
};

// Starts at the home pose with open grippers and identity orientation.
class GestureScriptSource : public LeaderSource {
 public:
  // Throws LimitViolation for out-of-limit targets, Error for unknown names.
  GestureScriptSource(const LeaderSchema& schema, std::vector<ScriptStep> steps,
                      double end_s = -1.0);

  StateFrame Sample(std::int64_t t_ns) override;
  bool Finished(std::int64_t t_ns) const override;
  std::size_t joint_count() const override { return schema_.joints.size(); }
  std::size_t gripper_count() const override {
    return schema_.grippers.size();
  }

 private:
  // Channel layout: joints, then grippers, then roll, pitch, yaw.
  std::vector<double> Evaluate(double t_s) const;

  LeaderSchema schema_;
  std::size_t n_channels_;
  // Per channel, steps ordered by time: (at, ramp, target).
  std::vector<std::vector<std::array<double, 3>>> channel_steps_;
  std::vector<double> base_;
  double end_s_;
};

// --- Traces ----------------------------------------------------------------

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error("leader_source", "IoError: " + message) {}
};

struct TraceSample {
  std::int64_t t_ns = 0;
  std::vector<float> positions;
  std::vector<float> triggers;
  std::array<float, 4> orientation{1.0f, 0.0f, 0.0f, 0.0f};

  bool operator==(const TraceSample&) const = default;
};

struct TraceHeader {
  std::string fingerprint;  // crc32 of the serialized leader config, hex
  double rate_hz = 0.0;
  std::vector<std::string> joint_names;
  std::size_t n_grippers = 0;

  bool operator==(const TraceHeader&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceSample> samples;
};

std::string ConfigFingerprint(const DeviceConfig& config);
TraceHeader MakeTraceHeader(const DeviceConfig& leader, double rate_hz);

// .chtrace writer: a text header line, then encoded frames back to back.
class TraceWriter {
 public:
  // Throws IoError.
  TraceWriter(const std::string& path, TraceHeader header);

  // Throws SchemaMismatch if the frame does not fit the header, or Error
  // if its stamp does not increase.
  void Append(const StateFrame& frame);
  void Flush();
  std::size_t count() const { return count_; }

 private:
  TraceHeader header_;
  std::unique_ptr<std::ofstream> out_;
  std::vector<std::uint8_t> buffer_;
  std::size_t count_ = 0;
  std::optional<std::int64_t> last_stamp_;
};

Trace ReadTrace(const std::string& path);  // throws IoError

// Samples a provider at the header rate for n_samples ticks and writes a
// trace. Throws SchemaMismatch before creating the file if the provider
// does not match the leader config.
Trace Record(LeaderSource& source, const DeviceConfig& leader,
             const std::string& path, double rate_hz, std::size_t n_samples);

// Tap that forwards another source and appends every sample to a trace,
// stamped with the sample time. Used to record live sessions.
class RecordingSource : public LeaderSource {
 public:
  // Throws SchemaMismatch before creating the file, or IoError.
  RecordingSource(LeaderSource& inner, const DeviceConfig& leader,
                  const std::string& path, double rate_hz);
  ~RecordingSource() override;

  StateFrame Sample(std::int64_t t_ns) override;
  bool Finished(std::int64_t t_ns) const override {
    return inner_.Finished(t_ns);
  }
  std::size_t joint_count() const override { return inner_.joint_count(); }
  std::size_t gripper_count() const override { return inner_.gripper_count(); }
  std::size_t recorded() const { return writer_->count(); }

 private:
  LeaderSource& inner_;
  std::unique_ptr<TraceWriter> writer_;
  std::uint64_t seq_ = 0;
};

class EmptyTrace : public Error {
 public:
  EmptyTrace() : Error("leader_source", "EmptyTrace: trace has no samples") {}
};

// Replays recorded samples with timestamps divided by speed. Velocities
// are finite differences of consecutive samples. After the last sample the
// final frame is held.
class ReplaySource : public LeaderSource {
 public:
  // Throws EmptyTrace, or Error if speed <= 0.
  ReplaySource(Trace trace, double speed);

  StateFrame Sample(std::int64_t t_ns) override;
  bool Finished(std::int64_t t_ns) const override;
  std::size_t joint_count() const override;
  std::size_t gripper_count() const override;
  // Index of the sample that Sample(t_ns) returns.
  std::size_t IndexAt(std::int64_t t_ns) const;

 private:
  Trace trace_;
  double speed_;
};

}  // namespace child

#endif  // CHILD_LEADER_SOURCE_H_
