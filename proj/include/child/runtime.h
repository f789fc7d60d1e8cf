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

#ifndef CHILD_RUNTIME_H_
#define CHILD_RUNTIME_H_

// Live leader and follower nodes. The leader node samples a source and
// publishes frames; the follower node receives them into the latest-value
// cell and runs the session and simulator at the control rate. The console
// bridge, when enabled, feeds the console source and mirrors follower state.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "child/config.h"
#include "child/console_bridge.h"
#include "child/follower_sim.h"
#include "child/latest_cell.h"
#include "child/leader_source.h"
#include "child/session.h"
#include "child/transport.h"

namespace child {

enum class RunRole { kBoth, kLeader, kFollower };
enum class SourceMode { kSynth, kReplay, kConsole };
enum class SynthKind { kHold, kSine };

struct RunManifest {
  std::string leader_path;
  std::string follower_path;
  RunRole role = RunRole::kBoth;
  SourceMode source = SourceMode::kSynth;
  SynthKind synth = SynthKind::kHold;
  double sine_amplitude = 0.2;
  double sine_frequency_hz = 0.25;
  std::string trace_path;
  double replay_speed = 1.0;
  // Follower binds here; the leader sends here. Port 0 (role both only)
  // binds an ephemeral port.
  Endpoint state_endpoint{"127.0.0.1", kDefaultStatePort};
  double rate_hz = 100.0;
  std::filesystem::path log_dir;      // empty: no logs
  std::filesystem::path record_path;  // empty: no recording
  bool console = false;
  std::string console_host = "127.0.0.1";
  std::uint16_t console_port = kDefaultConsolePort;
  std::filesystem::path assets_dir;
  double duration_s = 0.0;  // 0: until stopped

  // Throws Error("cli", ...) on an invalid combination.
  void Validate() const;
  // CHILD_STATE_ENDPOINT and CHILD_CONSOLE_PORT override the fields.
  void ApplyEnvironment();
};

struct RunStatus {
  Phase phase = Phase::kIdle;
  std::uint64_t control_ticks = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_malformed = 0;
  std::uint64_t frames_published = 0;
  std::uint64_t events = 0;
  BasePose base;
  bool stale = true;
};

class Runtime {
 public:
  explicit Runtime(RunManifest manifest);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  // Loads configs, binds sockets and starts all threads. Throws Error whose
  // module names the failing component; a failed start leaves nothing
  // running.
  void Start();
  // Idempotent. Joins every thread and closes every socket.
  void Stop();
  bool running() const { return running_; }

  RunStatus status() const;
  std::uint16_t state_port() const;
  std::uint16_t console_port() const;
  const RunManifest& manifest() const { return manifest_; }

 private:
  void ControlLoop(std::stop_token stop);

  RunManifest manifest_;
  std::optional<TeleopPlan> plan_;
  std::unique_ptr<ConsoleBridge> bridge_;
  std::unique_ptr<LeaderSource> source_;
  std::unique_ptr<LeaderSource> recording_;  // wraps source_ when recording
  std::unique_ptr<Publisher> publisher_;
  std::unique_ptr<LatestFrameCell> cell_;
  std::unique_ptr<Subscriber> subscriber_;
  std::jthread control_;
  std::ofstream events_log_;
  std::ofstream trajectory_log_;
  std::atomic<bool> running_{false};
  std::uint16_t state_port_ = 0;

  mutable std::mutex status_mutex_;
  RunStatus status_;
};

}  // namespace child

#endif  // CHILD_RUNTIME_H_
