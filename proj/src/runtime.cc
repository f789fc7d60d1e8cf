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

#include "child/runtime.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <iostream>

namespace child {
namespace {

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Re-throws any failure with the component that raised it in front.
template <typename F>
auto Guard(std::string_view component, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.module() == component) throw;
    throw Error(std::string(component), e.what());
  } catch (const std::exception& e) {
    throw Error(std::string(component), e.what());
  }
}

}  // namespace

void RunManifest::Validate() const {
  if (!(rate_hz >= 10.0 && rate_hz <= 1000.0)) {
    throw Error("cli", "rate_hz must be in [10, 1000], got " + FormatDouble(rate_hz));
  }
  if (leader_path.empty()) throw Error("cli", "a leader config is required");
  if (role != RunRole::kLeader && follower_path.empty()) {
    throw Error("cli", "a follower config is required for the follower node");
  }
  if (role != RunRole::kFollower && source == SourceMode::kReplay &&
      trace_path.empty()) {
    throw Error("cli", "replay needs a trace path");
  }
  if (!(replay_speed > 0.0)) throw Error("cli", "replay speed must be > 0");
  if (state_endpoint.port == 0 && role != RunRole::kBoth) {
    throw Error("cli", "port 0 is only allowed when both nodes run here");
  }
  if (!record_path.empty() && role == RunRole::kFollower) {
    throw Error("cli", "recording taps the leader node; use role both or leader");
  }
  if (!(duration_s >= 0.0)) throw Error("cli", "duration must be >= 0");
}

void RunManifest::ApplyEnvironment() {
  if (const char* v = std::getenv("CHILD_STATE_ENDPOINT"); v && *v) {
    state_endpoint = Endpoint::Parse(v);
  }
  if (const char* v = std::getenv("CHILD_CONSOLE_PORT"); v && *v) {
    char* end = nullptr;
    const long port = std::strtol(v, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) {
      throw Error("cli", std::string("CHILD_CONSOLE_PORT is not a port: ") + v);
    }
    console_port = static_cast<std::uint16_t>(port);
  }
}

Runtime::Runtime(RunManifest manifest) : manifest_(std::move(manifest)) {}

Runtime::~Runtime() { Stop(); }

void Runtime::Start() {
  if (running_) return;
  manifest_.Validate();
  try {
    const DeviceConfig leader =
        Guard("config", [&] { return LoadConfigFile(manifest_.leader_path); });
    if (!manifest_.follower_path.empty()) {
      const DeviceConfig follower =
          Guard("config", [&] { return LoadConfigFile(manifest_.follower_path); });
      plan_ = Guard("config", [&] { return MakePlan(leader, follower); });
    }
    const LeaderSchema schema = LeaderSchema::FromConfig(leader);
    const bool leader_node = manifest_.role != RunRole::kFollower;
    const bool follower_node = manifest_.role != RunRole::kLeader;

    if (manifest_.console || (leader_node && manifest_.source == SourceMode::kConsole)) {
      ConsoleSchema console_schema;
      if (plan_) {
        console_schema = ConsoleSchema::FromPlan(*plan_);
      } else {
        console_schema.leader = schema;
      }
      bridge_ = std::make_unique<ConsoleBridge>(
          ConsoleBridge::Options{manifest_.console_host, manifest_.console_port,
                                 manifest_.assets_dir},
          std::move(console_schema));
      Guard("console", [&] { bridge_->Start(); });
    }

    Endpoint destination = manifest_.state_endpoint;
    if (follower_node) {
      cell_ = std::make_unique<LatestFrameCell>();
      subscriber_ = Guard("transport", [&] {
        return std::make_unique<Subscriber>(manifest_.state_endpoint, *cell_);
      });
      state_port_ = subscriber_->port();
      destination.port = state_port_;
      std::filesystem::path dir = manifest_.log_dir;
      if (!dir.empty()) {
        Guard("runtime", [&] {
          std::filesystem::create_directories(dir);
          events_log_.open(dir / "events.log");
          trajectory_log_.open(dir / "trajectory.log");
          if (!events_log_ || !trajectory_log_) {
            throw Error("runtime", "cannot write logs in '" + dir.string() + "'");
          }
        });
      }
    }

    if (leader_node) {
      source_ = Guard("leader_source", [&]() -> std::unique_ptr<LeaderSource> {
        switch (manifest_.source) {
          case SourceMode::kSynth:
            if (manifest_.synth == SynthKind::kSine) {
              return std::make_unique<SineSweepSource>(
                  schema, manifest_.sine_amplitude, manifest_.sine_frequency_hz);
            }
            return std::make_unique<HoldSource>(HoldSource::AtHome(schema));
          case SourceMode::kReplay:
            return std::make_unique<ReplaySource>(ReadTrace(manifest_.trace_path),
                                                  manifest_.replay_speed);
          case SourceMode::kConsole:
            return std::make_unique<ConsoleLeaderSource>(schema, *bridge_);
        }
        return nullptr;
      });
      LeaderSource* publish_from = source_.get();
      if (!manifest_.record_path.empty()) {
        recording_ = Guard("leader_source", [&] {
          return std::make_unique<RecordingSource>(
              *source_, leader, manifest_.record_path.string(), manifest_.rate_hz);
        });
        publish_from = recording_.get();
      }
      publisher_ = std::make_unique<Publisher>(
          *publish_from, destination, PublishOptions{manifest_.rate_hz, {}});
    }

    if (subscriber_) subscriber_->Start();
    if (follower_node) {
      control_ = std::jthread([this](std::stop_token stop) { ControlLoop(stop); });
    }
    if (publisher_) Guard("transport", [&] { publisher_->Start(); });
    running_ = true;
  } catch (...) {
    Stop();
    throw;
  }
}

void Runtime::Stop() {
  // Producers first, so nothing writes into a torn-down consumer.
  if (publisher_) publisher_->Stop();
  if (control_.joinable()) {
    control_.request_stop();
    control_.join();
  }
  if (subscriber_) subscriber_->Stop();
  if (bridge_) bridge_->Stop();
  {
    std::lock_guard lock(status_mutex_);
    if (publisher_) status_.frames_published = publisher_->stats().sent;
  }
  publisher_.reset();
  recording_.reset();
  source_.reset();
  subscriber_.reset();
  bridge_.reset();
  events_log_.close();
  trajectory_log_.close();
  running_ = false;
}

RunStatus Runtime::status() const {
  std::lock_guard lock(status_mutex_);
  RunStatus s = status_;
  if (publisher_) s.frames_published = publisher_->stats().sent;
  return s;
}

std::uint16_t Runtime::state_port() const { return state_port_; }

std::uint16_t Runtime::console_port() const {
  return bridge_ ? bridge_->port() : 0;
}

void Runtime::ControlLoop(std::stop_token stop) {
  const TeleopPlan& plan = *plan_;
  const double dt = 1.0 / manifest_.rate_hz;
  const auto period = std::chrono::nanoseconds(std::llround(dt * 1e9));
  const auto timeout_ns = static_cast<std::int64_t>(
      std::llround(plan.follower.session.staleness_timeout_s * 1e9));
  constexpr std::int64_t kConsolePeriodNs = 33'333'333;

  SessionState session = InitialSessionState(plan);
  FollowerState follower = InitialFollowerState(plan.follower);
  const TrackingParams tracking = TrackingParams::FromConfig(plan.follower);
  std::deque<std::string> recent;
  std::int64_t last_console_ns = 0;
  std::uint64_t ticks = 0;
  std::uint64_t events = 0;

  if (trajectory_log_.is_open()) {
    trajectory_log_ << "# time_ns phase base_x base_y heading vx vy wz";
    for (const JointSpec& j : plan.follower_joints) trajectory_log_ << ' ' << j.name;
    trajectory_log_ << '\n';
  }

  auto next = std::chrono::steady_clock::now();
  while (!stop.stop_requested()) {
    next += period;
    std::this_thread::sleep_until(next);
    const std::int64_t now = MonotonicNowNs();
    const auto latest = cell_->Latest();
    const bool stale = cell_->Stale(now, timeout_ns);
    StepResult step;
    try {
      step = Step(session, {latest ? &latest->frame : nullptr, stale}, follower,
                  dt, plan);
      follower = StepFollower(follower, step.commands, dt, tracking);
    } catch (const std::exception& e) {
      std::cerr << "control loop stopped: " << e.what() << '\n';
      break;
    }
    session = std::move(step.state);
    ++ticks;

    for (const GestureEvent& e : step.events) {
      const std::string line = e.ToLogLine();
      if (events_log_.is_open()) events_log_ << line << '\n' << std::flush;
      recent.push_back(line);
      if (recent.size() > 20) recent.pop_front();
      ++events;
    }
    if (trajectory_log_.is_open()) {
      trajectory_log_ << session.time_ns << ' ' << ToString(session.phase) << ' '
                      << FormatDouble(follower.base.x) << ' '
                      << FormatDouble(follower.base.y) << ' '
                      << FormatDouble(follower.base.heading) << ' '
                      << FormatDouble(step.commands.velocity.vx) << ' '
                      << FormatDouble(step.commands.velocity.vy) << ' '
                      << FormatDouble(step.commands.velocity.wz);
      for (double q : follower.joints) trajectory_log_ << ' ' << FormatDouble(q);
      trajectory_log_ << '\n';
    }
    {
      std::lock_guard lock(status_mutex_);
      status_.phase = session.phase;
      status_.control_ticks = ticks;
      status_.frames_received = cell_->accepted();
      status_.frames_malformed = cell_->malformed();
      status_.events = events;
      status_.base = follower.base;
      status_.stale = stale;
    }
    if (bridge_ && now - last_console_ns >= kConsolePeriodNs) {
      last_console_ns = now;
      ConsoleStateMessage message =
          ConsoleStateMessage::FromSession(session, follower, step.commands, plan);
      message.stale = stale;
      if (auto age = cell_->AgeNs(now)) message.link_age_ms = *age / 1e6;
      message.frames_received = cell_->accepted();
      message.frames_malformed = cell_->malformed();
      message.events.assign(recent.begin(), recent.end());
      bridge_->PublishState(message);
    }
  }
}

}  // namespace child
