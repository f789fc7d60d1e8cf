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

#ifndef CHILD_CONSOLE_BRIDGE_H_
#define CHILD_CONSOLE_BRIDGE_H_

// Local WebSocket endpoint for the browser console. One TCP port serves the
// console's static files over plain HTTP and upgrades requests for /ws to a
// WebSocket carrying JSON text messages:
//
//   server -> client  {"type":"schema", ...}   once, on connect
//   server -> client  {"type":"state", ...}    at state_rate_hz
//   client -> server  {"type":"leader", ...}   leader input, any rate
//   server -> client  {"type":"error", ...}    reply to a rejected message
//
// docs/console_protocol.md has the field-level schema.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "child/config.h"
#include "child/follower_sim.h"
#include "child/leader_source.h"
#include "child/session.h"

namespace child {

inline constexpr int kConsoleProtocolVersion = 1;

// Snapshot of the follower side for the console. Built by the control loop;
// the console renders it without any session logic of its own.
struct ConsoleStateMessage {
  std::int64_t time_ns = 0;
  Phase phase = Phase::kIdle;
  double arming_s = 0.0;
  double sync_progress = 0.0;
  bool left_leg_joystick = false;
  bool right_leg_joystick = false;
  bool left_arm_active = true;
  bool right_arm_active = true;
  std::vector<double> hold_s;  // per leader gripper
  std::vector<double> follower_joints;
  std::vector<double> follower_grippers;
  BasePose base;
  Quaternion base_orientation;
  VelocityCommand velocity;
  std::vector<double> feedback_torques;  // leader joint order
  double tau_max = 0.0;
  bool stale = true;
  std::optional<double> link_age_ms;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_malformed = 0;
  std::vector<std::string> events;  // recent ToLogLine() entries

  static ConsoleStateMessage FromSession(const SessionState& session,
                                         const FollowerState& follower,
                                         const CommandSet& commands,
                                         const TeleopPlan& plan);
  std::string ToJson() const;
};

// Static description sent on connect. Sliders clamp to these limits.
struct ConsoleSchema {
  LeaderSchema leader;
  std::vector<std::string> follower_joints;
  std::vector<std::string> follower_grippers;
  double activation_hold_s = 3.0;
  double toggle_hold_s = 1.0;
  double close_threshold = 0.8;
  double release_threshold = 0.6;
  double state_rate_hz = 30.0;

  static ConsoleSchema FromPlan(const TeleopPlan& plan);
  std::string ToJson() const;
};

// One leader sample from the console after clamping to the schema.
struct ConsoleLeaderInput {
  std::vector<double> positions;
  std::vector<double> triggers;
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
  std::uint64_t count = 0;  // messages accepted so far
};

// Parses and sanitizes a {"type":"leader"} message: positions clamp to joint
// limits, triggers to [0, 1], the quaternion is normalized (identity if
// degenerate). Throws Error for malformed JSON or wrong vector lengths.
ConsoleLeaderInput ParseLeaderMessage(const std::string& text,
                                      const LeaderSchema& schema);

class ConsoleBridge {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 47557;  // 0 picks an ephemeral port
    std::filesystem::path assets_dir;
  };

  ConsoleBridge(Options options, ConsoleSchema schema);
  ~ConsoleBridge();
  ConsoleBridge(const ConsoleBridge&) = delete;
  ConsoleBridge& operator=(const ConsoleBridge&) = delete;

  // Binds and starts the I/O thread. Throws NetworkError.
  void Start();
  // Closes every connection and joins the I/O thread.
  void Stop();
  std::uint16_t port() const { return port_; }
  std::size_t client_count() const { return clients_->load(); }

  // Latest state; each client receives the newest one on its next tick.
  void PublishState(const ConsoleStateMessage& message);
  std::optional<ConsoleLeaderInput> LatestInput() const;

  struct Impl;

 private:
  Options options_;
  ConsoleSchema schema_;
  std::uint16_t port_ = 0;
  std::shared_ptr<std::atomic<std::size_t>> clients_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

// Leader source fed by console input. Before the first message it reports
// the home pose with open grippers. Thread-safe.
class ConsoleLeaderSource : public LeaderSource {
 public:
  ConsoleLeaderSource(const LeaderSchema& schema, const ConsoleBridge& bridge);

  StateFrame Sample(std::int64_t t_ns) override;
  std::size_t joint_count() const override { return schema_.joints.size(); }
  std::size_t gripper_count() const override {
    return schema_.grippers.size();
  }

 private:
  LeaderSchema schema_;
  const ConsoleBridge& bridge_;
  std::mutex mutex_;
  std::vector<double> previous_;
  std::optional<std::int64_t> previous_t_ns_;
};

}  // namespace child

#endif  // CHILD_CONSOLE_BRIDGE_H_
