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

#include "cli.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "child/config.h"
#include "child/leader_source.h"
#include "child/runtime.h"
#include "child/scenario.h"
#include "child/transport.h"

namespace child::cli {
namespace {

namespace fs = std::filesystem;

// Sleeps in short slices until stop is set or the deadline passes
// (duration_s <= 0 waits for stop only).
void WaitFor(double duration_s, const std::atomic<bool>& stop,
             const std::function<bool()>& done = {}) {
  const auto start = std::chrono::steady_clock::now();
  while (!stop) {
    if (duration_s > 0.0 &&
        std::chrono::steady_clock::now() - start >=
            std::chrono::duration<double>(duration_s)) {
      return;
    }
    if (done && done()) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::string EnvOr(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// --- validate ---------------------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> configs;
};

int Validate(const ValidateArgs& args, std::ostream& out) {
  std::vector<DeviceConfig> configs;
  for (const std::string& path : args.configs) {
    configs.push_back(LoadConfigFile(path));
    const DeviceConfig& c = configs.back();
    out << path << ": ok (" << ToString(c.role) << ", " << c.limbs.size()
        << " limbs, " << c.JointCount() << " joints)\n";
  }
  if (configs.size() == 2) {
    if (configs[0].role != Role::kLeader || configs[1].role != Role::kFollower) {
      throw Error("cli", "validate expects the leader config first, then the follower");
    }
    out << ValidateMapping(configs[0], configs[1]).Format();
  }
  return kExitOk;
}

// --- run --------------------------------------------------------------------

struct RunArgs {
  RunManifest manifest;
  std::string role = "both";
  std::string source = "synth";
  std::string synth = "hold";
  std::string state_endpoint;
  std::string log_dir;
  std::string record;
  std::string assets;
};

int Run(RunArgs args, std::ostream& out, const std::atomic<bool>& stop) {
  RunManifest& m = args.manifest;
  m.role = args.role == "leader"     ? RunRole::kLeader
           : args.role == "follower" ? RunRole::kFollower
                                     : RunRole::kBoth;
  m.source = args.source == "replay"    ? SourceMode::kReplay
             : args.source == "console" ? SourceMode::kConsole
                                        : SourceMode::kSynth;
  m.synth = args.synth == "sine" ? SynthKind::kSine : SynthKind::kHold;
  m.ApplyEnvironment();
  if (!args.state_endpoint.empty()) m.state_endpoint = Endpoint::Parse(args.state_endpoint);
  m.log_dir = args.log_dir;
  m.record_path = args.record;
  m.assets_dir = args.assets;
  if (m.console && m.assets_dir.empty()) {
    m.assets_dir = EnvOr("CHILD_CONSOLE_ASSETS", "");
    if (m.assets_dir.empty()) {
      m.assets_dir = fs::is_directory(CHILD_CONSOLE_DIST_DIR) ? CHILD_CONSOLE_DIST_DIR
                                                              : CHILD_PLACEHOLDER_ASSETS_DIR;
    }
  }

  Runtime runtime(m);
  runtime.Start();
  out << "running: role " << args.role << ", source " << args.source << ", state port "
      << (m.role == RunRole::kLeader ? m.state_endpoint.port : runtime.state_port())
      << ", " << m.rate_hz << " Hz";
  if (runtime.console_port() != 0) {
    out << ", console http://" << m.console_host << ":" << runtime.console_port()
        << "/ (websocket /ws)";
  }
  out << "\n" << std::flush;
  WaitFor(m.duration_s, stop);
  runtime.Stop();
  const RunStatus s = runtime.status();
  out << "stopped: phase " << ToString(s.phase) << ", " << s.control_ticks
      << " control ticks, " << s.frames_published << " frames sent, "
      << s.frames_received << " received, " << s.events << " events\n";
  return kExitOk;
}

// --- bench-latency ----------------------------------------------------------

struct BenchArgs {
  double duration_s = 10.0;
  double rate_hz = 100.0;
  std::string report = "latency_report.json";
  std::string endpoint;
  std::string echo;
  std::string serve_echo;
  bool in_memory = false;
};

int BenchLatency(const BenchArgs& args, std::ostream& out,
                 const std::atomic<bool>& stop) {
  if (!args.serve_echo.empty()) {
    const Endpoint bind = Endpoint::Parse(args.serve_echo);
    std::jthread server([&](std::stop_token token) { RunEchoServer(bind, token); });
    out << "echo server on " << bind.ToString() << "\n" << std::flush;
    WaitFor(args.duration_s, stop);
    server.request_stop();
    return kExitOk;
  }
  LatencyReport report;
  if (args.in_memory) {
    report = RunInMemoryLatencyProbe(args.duration_s, args.rate_hz);
  } else {
    LatencyProbeOptions options;
    options.duration_s = args.duration_s;
    options.rate_hz = args.rate_hz;
    options.receive = Endpoint::Parse(
        args.endpoint.empty()
            ? EnvOr("CHILD_PROBE_ENDPOINT",
                    "127.0.0.1:" + std::to_string(kDefaultProbePort))
            : args.endpoint);
    if (!args.echo.empty()) options.echo_server = Endpoint::Parse(args.echo);
    report = RunLatencyProbe(options);
  }
  out << report.Format() << "\n";
  if (!args.report.empty()) {
    std::ofstream file(args.report);
    file << report.ToJson() << "\n";
    if (!file) throw Error("cli", "cannot write report '" + args.report + "'");
    out << "report written to " << args.report << "\n";
  }
  return kExitOk;
}

// --- scenario ---------------------------------------------------------------

struct ScenarioArgs {
  std::string script;
  std::string log_dir;
  bool write_golden = false;
};

int RunScenarioCommand(const ScenarioArgs& args, std::ostream& out) {
  const Scenario scenario = LoadScenario(args.script);
  ScenarioReport report = RunScenario(scenario);
  if (args.write_golden) {
    if (!scenario.assertions.golden_events) {
      throw Error("cli", "scenario has no golden_events path");
    }
    {
      std::ofstream golden(*scenario.assertions.golden_events, std::ios::binary);
      golden << report.event_log;
      if (!golden) throw Error("cli", "cannot write golden");
    }
    out << "golden written to " << scenario.assertions.golden_events->string() << "\n";
    report = RunScenario(scenario);
  }
  if (!args.log_dir.empty()) WriteScenarioLogs(report, args.log_dir);
  out << report.Summary();
  return report.passed() ? kExitOk : kExitFailure;
}

// --- record / replay --------------------------------------------------------

struct RecordArgs {
  std::string leader;
  std::string synth = "hold";
  std::string script;
  double amplitude = 0.2;
  double frequency_hz = 0.25;
  double rate_hz = 100.0;
  double duration_s = 10.0;
  std::string out;
};

int Record(const RecordArgs& args, std::ostream& out) {
  std::unique_ptr<LeaderSource> source;
  DeviceConfig leader;
  if (!args.script.empty()) {
    const Scenario scenario = LoadScenario(args.script);
    leader = LoadConfigFile(scenario.leader_path.string());
    const LeaderSchema schema = LeaderSchema::FromConfig(leader);
    const SourceSpec& spec = scenario.source;
    if (spec.kind == SourceKind::kScript) {
      source = std::make_unique<GestureScriptSource>(schema, spec.steps, spec.end_s);
    } else if (spec.kind == SourceKind::kSine) {
      source = std::make_unique<SineSweepSource>(schema, spec.amplitude, spec.frequency_hz);
    } else if (spec.kind == SourceKind::kHold) {
      source = std::make_unique<HoldSource>(HoldSource::AtHome(schema));
    } else {
      throw Error("cli", "scenario source cannot be recorded");
    }
  } else {
    if (args.leader.empty()) throw Error("cli", "record needs --leader or --script");
    leader = LoadConfigFile(args.leader);
    const LeaderSchema schema = LeaderSchema::FromConfig(leader);
    if (args.synth == "sine") {
      source = std::make_unique<SineSweepSource>(schema, args.amplitude, args.frequency_hz);
    } else {
      source = std::make_unique<HoldSource>(HoldSource::AtHome(schema));
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(args.duration_s * args.rate_hz));
  const Trace trace = child::Record(*source, leader, args.out, args.rate_hz, n);
  out << "recorded " << trace.samples.size() << " samples to " << args.out << "\n";
  return kExitOk;
}

struct ReplayArgs {
  std::string trace;
  std::string to;
  double speed = 1.0;
  double rate_hz = 100.0;
};

int Replay(const ReplayArgs& args, std::ostream& out, const std::atomic<bool>& stop) {
  Trace trace = ReadTrace(args.trace);
  const std::size_t n = trace.samples.size();
  ReplaySource source(std::move(trace), args.speed);
  const Endpoint to = Endpoint::Parse(
      args.to.empty() ? EnvOr("CHILD_STATE_ENDPOINT",
                              "127.0.0.1:" + std::to_string(kDefaultStatePort))
                      : args.to);
  Publisher publisher(source, to, PublishOptions{args.rate_hz, {}});
  publisher.Start();
  // The publisher thread returns once the source reports Finished.
  WaitFor(0.0, stop, [&] { return !publisher.running(); });
  publisher.Stop();
  const PublishStats stats = publisher.stats();
  out << "replayed " << n << " samples as " << stats.sent << " frames to "
      << to.ToString() << " (" << stats.send_failures << " send failures)\n";
  return kExitOk;
}

}  // namespace

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
         const std::atomic<bool>& stop) {
  CLI::App app{"Whole-body leader/follower teleoperation stack", "child"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand(
      "validate", "Parse configs; with a leader and a follower, check the mapping");
  validate_cmd->add_option("configs", validate.configs, "leader [follower] config files")
      ->required()
      ->expected(1, 2)
      ->check(CLI::ExistingFile);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run leader and/or follower nodes live");
  run_cmd->add_option("--leader", run.manifest.leader_path, "leader config")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--follower", run.manifest.follower_path, "follower config")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--role", run.role, "nodes to run in this process")
      ->check(CLI::IsMember({"both", "leader", "follower"}));
  run_cmd->add_option("--source", run.source, "leader source")
      ->check(CLI::IsMember({"synth", "replay", "console"}));
  run_cmd->add_option("--synth", run.synth, "synthetic source kind")
      ->check(CLI::IsMember({"hold", "sine"}));
  run_cmd->add_option("--amplitude", run.manifest.sine_amplitude, "sine amplitude, rad");
  run_cmd->add_option("--frequency", run.manifest.sine_frequency_hz, "sine frequency, Hz");
  run_cmd->add_option("--trace", run.manifest.trace_path, "trace file for --source replay");
  run_cmd->add_option("--speed", run.manifest.replay_speed, "replay speed multiplier");
  run_cmd->add_option("--state-endpoint", run.state_endpoint,
                      "host:port for state frames [env CHILD_STATE_ENDPOINT, default "
                      "127.0.0.1:47555]");
  run_cmd->add_option("--rate", run.manifest.rate_hz, "control and publish rate, Hz")
      ->check(CLI::Range(10.0, 1000.0));
  run_cmd->add_option("--duration", run.manifest.duration_s, "seconds; 0 runs until SIGINT");
  run_cmd->add_option("--log-dir", run.log_dir, "write events.log and trajectory.log here");
  run_cmd->add_option("--record", run.record, "also record the leader stream to this trace");
  run_cmd->add_flag("--console", run.manifest.console, "serve the browser console");
  run_cmd->add_option("--console-port", run.manifest.console_port,
                      "console HTTP/WebSocket port [env CHILD_CONSOLE_PORT]");
  run_cmd->add_option("--assets", run.assets,
                      "console static files [env CHILD_CONSOLE_ASSETS]");

  BenchArgs bench;
  auto* bench_cmd =
      app.add_subcommand("bench-latency", "Measure one-way frame latency");
  bench_cmd->add_option("--duration", bench.duration_s, "seconds")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--rate", bench.rate_hz, "frames per second")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--report", bench.report, "JSON report path ('' to skip)");
  bench_cmd->add_option("--endpoint", bench.endpoint,
                        "receiver bind host:port [env CHILD_PROBE_ENDPOINT, default "
                        "127.0.0.1:47556]");
  bench_cmd->add_option("--echo", bench.echo,
                        "remote echo server; latency is half the round trip");
  bench_cmd->add_option("--serve-echo", bench.serve_echo,
                        "run an echo server on host:port for --duration seconds");
  bench_cmd->add_flag("--in-memory", bench.in_memory, "in-process queue instead of UDP");

  ScenarioArgs scenario;
  auto* scenario_cmd =
      app.add_subcommand("scenario", "Run a scenario script and check its assertions");
  scenario_cmd->add_option("script", scenario.script, "scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  scenario_cmd->add_option("--log-dir", scenario.log_dir,
                           "write <name>.events and <name>.traj here");
  scenario_cmd->add_flag("--write-golden", scenario.write_golden,
                         "overwrite the golden event log with this run");

  RecordArgs record;
  auto* record_cmd = app.add_subcommand("record", "Record a synthetic source to a trace");
  record_cmd->add_option("--leader", record.leader, "leader config")
      ->check(CLI::ExistingFile);
  record_cmd->add_option("--script", record.script, "record a scenario's leader source")
      ->check(CLI::ExistingFile);
  record_cmd->add_option("--synth", record.synth, "source kind without --script")
      ->check(CLI::IsMember({"hold", "sine"}));
  record_cmd->add_option("--amplitude", record.amplitude, "sine amplitude, rad");
  record_cmd->add_option("--frequency", record.frequency_hz, "sine frequency, Hz");
  record_cmd->add_option("--rate", record.rate_hz, "samples per second")
      ->check(CLI::Range(10.0, 1000.0));
  record_cmd->add_option("--duration", record.duration_s, "seconds")
      ->check(CLI::NonNegativeNumber);
  record_cmd->add_option("--out", record.out, "trace file (.chtrace)")->required();

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Publish a recorded trace");
  replay_cmd->add_option("--trace", replay.trace, "trace file")
      ->required()
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--to", replay.to,
                         "destination host:port [env CHILD_STATE_ENDPOINT]");
  replay_cmd->add_option("--speed", replay.speed, "time scale")
      ->check(CLI::PositiveNumber);
  replay_cmd->add_option("--rate", replay.rate_hz, "publish rate, Hz")
      ->check(CLI::Range(10.0, 1000.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) return Validate(validate, out);
    if (*run_cmd) return Run(run, out, stop);
    if (*bench_cmd) return BenchLatency(bench, out, stop);
    if (*scenario_cmd) return RunScenarioCommand(scenario, out);
    if (*record_cmd) return Record(record, out);
    if (*replay_cmd) return Replay(replay, out, stop);
  } catch (const Error& e) {
    err << "error [" << e.module() << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace child::cli
