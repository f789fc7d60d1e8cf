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

#include "child/transport.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <numeric>
#include <sstream>

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "child/leader_source.h"

namespace child {
namespace {

constexpr std::size_t kMaxDatagram = 65536;

std::string Errno(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

std::int64_t MonotonicNowNs() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// --- Endpoint ----------------------------------------------------------------

Endpoint Endpoint::Parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw NetworkError("endpoint '" + text + "' is not host:port");
  }
  Endpoint endpoint;
  endpoint.host = colon == 0 ? "0.0.0.0" : text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  char* end = nullptr;
  const long value = std::strtol(port.c_str(), &end, 10);
  if (*end != '\0' || value < 0 || value > 65535) {
    throw NetworkError("bad port in '" + text + "'");
  }
  endpoint.port = static_cast<std::uint16_t>(value);
  return endpoint;
}

std::string Endpoint::ToString() const {
  return host + ":" + std::to_string(port);
}

sockaddr_in Endpoint::ToSockaddr() const {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* result = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || !result) {
    throw NetworkError("cannot resolve host '" + host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  freeaddrinfo(result);
  return addr;
}

// --- UdpSocket -----------------------------------------------------------------

UdpSocket UdpSocket::Open() {
  const int fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw NetworkError(Errno("socket"));
  return UdpSocket(fd);
}

UdpSocket UdpSocket::Bind(const Endpoint& endpoint) {
  UdpSocket socket = Open();
  const sockaddr_in addr = endpoint.ToSockaddr();
  if (::bind(socket.fd_, reinterpret_cast<const sockaddr*>(&addr),
             sizeof(addr)) != 0) {
    throw NetworkError(Errno(("bind " + endpoint.ToString()).c_str()));
  }
  return socket;
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)) {}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

bool UdpSocket::SendTo(std::span<const std::uint8_t> bytes,
                       const sockaddr_in& to) {
  const ssize_t n =
      ::sendto(fd_, bytes.data(), bytes.size(), 0,
               reinterpret_cast<const sockaddr*>(&to), sizeof(to));
  return n == static_cast<ssize_t>(bytes.size());
}

std::optional<std::size_t> UdpSocket::Receive(std::span<std::uint8_t> buffer,
                                              int timeout_ms,
                                              sockaddr_in* from) {
  pollfd pfd{fd_, POLLIN, 0};
  if (::poll(&pfd, 1, timeout_ms) <= 0 || !(pfd.revents & POLLIN)) {
    return std::nullopt;
  }
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  const ssize_t n = ::recvfrom(fd_, buffer.data(), buffer.size(), 0,
                               reinterpret_cast<sockaddr*>(&addr), &len);
  if (n < 0) return std::nullopt;
  if (from) *from = addr;
  return static_cast<std::size_t>(n);
}

std::uint16_t UdpSocket::LocalPort() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    return 0;
  }
  return ntohs(addr.sin_port);
}

// --- Publisher ---------------------------------------------------------------

Publisher::Publisher(LeaderSource& source, Endpoint destination,
                     PublishOptions options)
    : source_(source),
      destination_(std::move(destination)),
      options_(std::move(options)) {
  if (!(options_.rate_hz > 0.0)) {
    throw Error("transport", "publish rate_hz must be > 0");
  }
}

Publisher::~Publisher() { Stop(); }

void Publisher::Start() {
  running_ = true;
  thread_ = std::jthread([this](std::stop_token stop) { Run(stop); });
}

void Publisher::Stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

bool Publisher::running() const { return running_; }

PublishStats Publisher::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

void Publisher::Run(std::stop_token stop) {
  running_ = true;
  UdpSocket socket = UdpSocket::Open();
  const sockaddr_in to = destination_.ToSockaddr();
  const auto period = std::chrono::nanoseconds(
      static_cast<std::int64_t>(std::llround(1e9 / options_.rate_hz)));
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::uint8_t> buffer;
  std::optional<std::int64_t> last_send_ns;
  double jitter_sum = 0.0;
  std::uint64_t jitter_count = 0;

  for (std::uint64_t k = 0; !stop.stop_requested(); ++k) {
    const auto tick = start + k * period;
    std::this_thread::sleep_until(tick);
    const std::int64_t t_ns = (k * period).count();
    StateFrame frame = source_.Sample(t_ns);
    frame.seq = k + 1;
    frame.stamp_ns = MonotonicNowNs();

    bool dropped = options_.drop && options_.drop(frame.seq);
    bool sent = false;
    bool failed = false;
    if (!dropped) {
      try {
        EncodeFrameInto(frame, buffer);
        sent = socket.SendTo(buffer, to);
        failed = !sent;
      } catch (const EncodeError&) {
        failed = true;
      }
    }

    std::lock_guard lock(mutex_);
    ++stats_.ticks;
    stats_.last_seq = frame.seq;
    stats_.sent += sent;
    stats_.send_failures += failed;
    stats_.injected_drops += dropped;
    if (last_send_ns) {
      const double jitter = std::abs(
          static_cast<double>(frame.stamp_ns - *last_send_ns - period.count()));
      jitter_sum += jitter;
      ++jitter_count;
      stats_.mean_abs_jitter_ns = jitter_sum / static_cast<double>(jitter_count);
      stats_.max_abs_jitter_ns = std::max(stats_.max_abs_jitter_ns, jitter);
    }
    last_send_ns = frame.stamp_ns;
    if (source_.Finished(t_ns)) break;
  }
  running_ = false;
}

// --- Subscriber --------------------------------------------------------------

Subscriber::Subscriber(const Endpoint& bind, LatestFrameCell& cell)
    : socket_(UdpSocket::Bind(bind)), cell_(cell) {}

Subscriber::~Subscriber() { Stop(); }

void Subscriber::Start() {
  thread_ = std::jthread([this](std::stop_token stop) { Run(stop); });
}

void Subscriber::Stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

void Subscriber::Run(std::stop_token stop) {
  std::vector<std::uint8_t> buffer(kMaxDatagram);
  while (!stop.stop_requested()) {
    auto n = socket_.Receive(buffer, 20);
    if (!n) continue;
    const std::int64_t recv_ns = MonotonicNowNs();
    DecodeResult result =
        DecodeFrame(std::span<const std::uint8_t>(buffer.data(), *n));
    if (!result.ok()) {
      cell_.CountMalformed();
      continue;
    }
    cell_.Offer(std::move(result.frame), recv_ns);
  }
}

// --- Latency -----------------------------------------------------------------

LatencyReport SummarizeLatency(std::vector<LatencySample> samples,
                               std::size_t expected) {
  if (expected == 0) {
    throw InsufficientSamples("probe expected zero samples");
  }
  LatencyReport report;
  report.expected = expected;
  report.received = std::min(samples.size(), expected);
  report.loss_fraction =
      1.0 - static_cast<double>(report.received) / static_cast<double>(expected);
  if (samples.empty() || report.loss_fraction > 0.5) {
    throw InsufficientSamples("received " + std::to_string(samples.size()) +
                              " of " + std::to_string(expected));
  }
  std::vector<double> one_way;
  one_way.reserve(samples.size());
  for (const LatencySample& s : samples) {
    one_way.push_back(static_cast<double>(s.one_way_ns));
  }
  std::sort(one_way.begin(), one_way.end());
  report.mean_ns = std::accumulate(one_way.begin(), one_way.end(), 0.0) /
                   static_cast<double>(one_way.size());
  const std::size_t n = one_way.size();
  report.median_ns = n % 2 ? one_way[n / 2]
                           : 0.5 * (one_way[n / 2 - 1] + one_way[n / 2]);
  const auto p99_index = static_cast<std::size_t>(
      std::ceil(0.99 * static_cast<double>(n))) - 1;
  report.p99_ns = one_way[std::min(p99_index, n - 1)];
  report.max_ns = one_way.back();
  return report;
}

std::string LatencyReport::Format() const {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer),
                "samples %zu/%zu  loss %.4f%%  mean %.3f ms  median %.3f ms  "
                "p99 %.3f ms  max %.3f ms  elapsed %.2f s",
                received, expected, 100.0 * loss_fraction, mean_ns / 1e6,
                median_ns / 1e6, p99_ns / 1e6, max_ns / 1e6, elapsed_s);
  return buffer;
}

std::string LatencyReport::ToJson() const {
  char buffer[384];
  std::snprintf(buffer, sizeof(buffer),
                "{\"expected\": %zu, \"received\": %zu, \"loss_fraction\": "
                "%.9g, \"mean_ns\": %.1f, \"median_ns\": %.1f, \"p99_ns\": "
                "%.1f, \"max_ns\": %.1f, \"elapsed_s\": %.6f}",
                expected, received, loss_fraction, mean_ns, median_ns, p99_ns,
                max_ns, elapsed_s);
  return buffer;
}

namespace {

StateFrame ProbeFrame(std::size_t n_joints, std::size_t n_grippers) {
  StateFrame frame;
  frame.flags = kFlagLatencyProbe;
  frame.joint_positions.assign(n_joints, 0.25f);
  frame.joint_velocities.assign(n_joints, 0.0f);
  frame.gripper_triggers.assign(n_grippers, 0.0f);
  return frame;
}

std::size_t ExpectedSamples(double duration_s, double rate_hz) {
  if (!(rate_hz > 0.0) || !(duration_s >= 0.0)) {
    throw InsufficientSamples("probe needs rate_hz > 0 and duration >= 0");
  }
  return static_cast<std::size_t>(std::llround(duration_s * rate_hz));
}

// Paces `count` sends at rate_hz, calling send(seq) for each.
template <typename Send>
void PacedSend(std::size_t count, double rate_hz, Send send) {
  const auto period = std::chrono::nanoseconds(
      static_cast<std::int64_t>(std::llround(1e9 / rate_hz)));
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < count; ++k) {
    std::this_thread::sleep_until(start + k * period);
    send(static_cast<std::uint64_t>(k + 1));
  }
}

constexpr auto kDrainTimeout = std::chrono::milliseconds(250);

}  // namespace

LatencyReport RunLatencyProbe(const LatencyProbeOptions& options) {
  const std::size_t expected =
      ExpectedSamples(options.duration_s, options.rate_hz);
  if (expected == 0) throw InsufficientSamples("zero-duration probe");

  const std::int64_t begin_ns = MonotonicNowNs();
  std::vector<LatencySample> samples;
  samples.reserve(expected);
  std::mutex samples_mutex;

  UdpSocket sender = UdpSocket::Open();
  std::optional<UdpSocket> receiver;
  sockaddr_in destination{};
  if (options.echo_server) {
    // Echoes come back to the sending socket.
    destination = options.echo_server->ToSockaddr();
  } else {
    receiver.emplace(UdpSocket::Bind(options.receive));
    Endpoint local = options.receive;
    local.port = receiver->LocalPort();
    if (local.host == "0.0.0.0") local.host = "127.0.0.1";
    destination = local.ToSockaddr();
  }
  UdpSocket& listen = receiver ? *receiver : sender;

  std::atomic<bool> sending_done{false};
  std::atomic<std::int64_t> done_at_ns{0};
  std::jthread listener([&](std::stop_token stop) {
    std::vector<std::uint8_t> buffer(kMaxDatagram);
    while (!stop.stop_requested()) {
      auto n = listen.Receive(buffer, 5);
      if (n) {
        const std::int64_t recv_ns = MonotonicNowNs();
        DecodeResult result =
            DecodeFrame(std::span<const std::uint8_t>(buffer.data(), *n));
        if (result.ok()) {
          const std::int64_t send_ns = result.frame.stamp_ns;
          const std::int64_t delta = recv_ns - send_ns;
          std::lock_guard lock(samples_mutex);
          samples.push_back({result.frame.seq, send_ns, recv_ns,
                             options.echo_server ? delta / 2 : delta});
          if (samples.size() >= expected) return;
        }
      }
      if (sending_done &&
          MonotonicNowNs() - done_at_ns.load() >
              std::chrono::nanoseconds(kDrainTimeout).count()) {
        return;
      }
    }
  });

  StateFrame frame = ProbeFrame(options.n_joints, options.n_grippers);
  std::vector<std::uint8_t> buffer;
  PacedSend(expected, options.rate_hz, [&](std::uint64_t seq) {
    frame.seq = seq;
    frame.stamp_ns = MonotonicNowNs();
    EncodeFrameInto(frame, buffer);
    sender.SendTo(buffer, destination);
  });
  done_at_ns = MonotonicNowNs();
  sending_done = true;
  listener.join();

  LatencyReport report = SummarizeLatency(std::move(samples), expected);
  report.elapsed_s = static_cast<double>(MonotonicNowNs() - begin_ns) / 1e9;
  return report;
}

LatencyReport RunInMemoryLatencyProbe(double duration_s, double rate_hz,
                                      std::size_t n_joints) {
  const std::size_t expected = ExpectedSamples(duration_s, rate_hz);
  if (expected == 0) throw InsufficientSamples("zero-duration probe");
  const std::int64_t begin_ns = MonotonicNowNs();

  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::vector<std::uint8_t>> queue;
  bool closed = false;
  std::vector<LatencySample> samples;
  samples.reserve(expected);

  std::jthread receiver([&] {
    for (;;) {
      std::vector<std::uint8_t> bytes;
      {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return closed || !queue.empty(); });
        if (queue.empty()) return;
        bytes = std::move(queue.front());
        queue.pop_front();
      }
      const std::int64_t recv_ns = MonotonicNowNs();
      DecodeResult result = DecodeFrame(bytes);
      if (result.ok()) {
        samples.push_back({result.frame.seq, result.frame.stamp_ns, recv_ns,
                           recv_ns - result.frame.stamp_ns});
      }
    }
  });

  StateFrame frame = ProbeFrame(n_joints, 2);
  PacedSend(expected, rate_hz, [&](std::uint64_t seq) {
    frame.seq = seq;
    frame.stamp_ns = MonotonicNowNs();
    std::vector<std::uint8_t> bytes = EncodeFrame(frame);
    {
      std::lock_guard lock(mutex);
      queue.push_back(std::move(bytes));
    }
    ready.notify_one();
  });
  {
    std::lock_guard lock(mutex);
    closed = true;
  }
  ready.notify_one();
  receiver.join();

  LatencyReport report = SummarizeLatency(std::move(samples), expected);
  report.elapsed_s = static_cast<double>(MonotonicNowNs() - begin_ns) / 1e9;
  return report;
}

void RunEchoServer(const Endpoint& bind, std::stop_token stop) {
  UdpSocket socket = UdpSocket::Bind(bind);
  std::vector<std::uint8_t> buffer(kMaxDatagram);
  while (!stop.stop_requested()) {
    sockaddr_in from{};
    auto n = socket.Receive(buffer, 20, &from);
    if (n) socket.SendTo(std::span<const std::uint8_t>(buffer.data(), *n), from);
  }
}

}  // namespace child
