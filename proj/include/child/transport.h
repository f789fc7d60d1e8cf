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

#ifndef CHILD_TRANSPORT_H_
#define CHILD_TRANSPORT_H_

// Datagram transport for leader state: endpoints, the publish loop, the
// subscriber feeding a LatestFrameCell, and latency measurement.

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <netinet/in.h>

#include "child/error.h"
#include "child/frame_codec.h"
#include "child/latest_cell.h"

namespace child {

inline constexpr std::uint16_t kDefaultStatePort = 47555;
inline constexpr std::uint16_t kDefaultProbePort = 47556;
inline constexpr std::uint16_t kDefaultConsolePort = 47557;

std::int64_t MonotonicNowNs();

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& message)
      : Error("transport", "NetworkError: " + message) {}
};

// IPv4 host:port. Port 0 asks the OS for an ephemeral port when binding.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint Parse(const std::string& text);  // throws NetworkError
  std::string ToString() const;
  sockaddr_in ToSockaddr() const;                  // throws NetworkError
};

class UdpSocket {
 public:
  // Throws NetworkError.
  static UdpSocket Bind(const Endpoint& endpoint);
  static UdpSocket Open();

  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  ~UdpSocket();

  bool SendTo(std::span<const std::uint8_t> bytes, const sockaddr_in& to);
  // Waits up to timeout_ms; returns the datagram size or nothing.
  std::optional<std::size_t> Receive(std::span<std::uint8_t> buffer,
                                     int timeout_ms,
                                     sockaddr_in* from = nullptr);
  std::uint16_t LocalPort() const;
  int fd() const { return fd_; }

 private:
  explicit UdpSocket(int fd) : fd_(fd) {}
  int fd_ = -1;
};

class LeaderSource;

struct PublishOptions {
  double rate_hz = 100.0;
  // Test hook: frames for which this returns true are counted as dropped
  // and not sent. Their seq is still consumed.
  std::function<bool(std::uint64_t seq)> drop;
};

struct PublishStats {
  std::uint64_t ticks = 0;
  std::uint64_t sent = 0;
  std::uint64_t send_failures = 0;
  std::uint64_t injected_drops = 0;
  std::uint64_t last_seq = 0;
  // Inter-send interval deviation from the nominal period.
  double mean_abs_jitter_ns = 0.0;
  double max_abs_jitter_ns = 0.0;
};

// Emits one frame per tick with strictly increasing seq (starting at 1).
// Send failures are counted, never fatal.
class Publisher {
 public:
  Publisher(LeaderSource& source, Endpoint destination, PublishOptions options);
  ~Publisher();

  void Start();
  void Stop();
  // Blocking loop; returns when stop is requested or the source finishes.
  void Run(std::stop_token stop);
  bool running() const;
  PublishStats stats() const;

 private:
  LeaderSource& source_;
  Endpoint destination_;
  PublishOptions options_;
  mutable std::mutex mutex_;
  PublishStats stats_;
  std::jthread thread_;
  std::atomic<bool> running_{false};
};

// Receives datagrams on a bound endpoint and feeds valid frames into the
// cell. Undecodable datagrams are counted by the cell.
class Subscriber {
 public:
  Subscriber(const Endpoint& bind, LatestFrameCell& cell);
  ~Subscriber();

  void Start();
  void Stop();
  std::uint16_t port() const { return socket_.LocalPort(); }

 private:
  void Run(std::stop_token stop);

  UdpSocket socket_;
  LatestFrameCell& cell_;
  std::jthread thread_;
};

// --- Latency -------------------------------------------------------------

struct LatencySample {
  std::uint64_t seq = 0;
  std::int64_t send_ns = 0;
  std::int64_t recv_ns = 0;
  std::int64_t one_way_ns = 0;
};

struct LatencyReport {
  std::size_t expected = 0;
  std::size_t received = 0;
  double mean_ns = 0.0;
  double median_ns = 0.0;
  double p99_ns = 0.0;
  double max_ns = 0.0;
  double loss_fraction = 0.0;
  double elapsed_s = 0.0;

  std::string Format() const;
  std::string ToJson() const;
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(const std::string& message)
      : Error("transport", "InsufficientSamples: " + message) {}
};

// Throws InsufficientSamples when nothing was expected or loss > 50%.
LatencyReport SummarizeLatency(std::vector<LatencySample> samples,
                               std::size_t expected);

struct LatencyProbeOptions {
  double duration_s = 10.0;
  double rate_hz = 100.0;
  // Where the in-process receiver binds (loopback mode).
  Endpoint receive{"127.0.0.1", kDefaultProbePort};
  // When set, frames go to a remote echo server and one-way latency is
  // half the round trip.
  std::optional<Endpoint> echo_server;
  std::size_t n_joints = 29;
  std::size_t n_grippers = 2;
};

// Sender and receiver share one clock, so one_way = recv - stamp.
LatencyReport RunLatencyProbe(const LatencyProbeOptions& options);
// Same measurement over an in-process queue instead of a socket.
LatencyReport RunInMemoryLatencyProbe(double duration_s, double rate_hz,
                                      std::size_t n_joints = 29);
// Bounces every datagram back to its sender until stop is requested.
void RunEchoServer(const Endpoint& bind, std::stop_token stop);

}  // namespace child

#endif  // CHILD_TRANSPORT_H_
