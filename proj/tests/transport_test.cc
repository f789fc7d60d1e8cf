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

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "child/leader_source.h"
#include "child/transport.h"
#include "test_support.h"

namespace child {
namespace {

using namespace std::chrono_literals;

TEST(EndpointTest, ParsesHostAndPort) {
  const Endpoint e = Endpoint::Parse("10.0.0.7:47555");
  EXPECT_EQ(e.host, "10.0.0.7");
  EXPECT_EQ(e.port, 47555);
  EXPECT_EQ(e.ToString(), "10.0.0.7:47555");
  EXPECT_EQ(Endpoint::Parse(":9000").host, "0.0.0.0");
  EXPECT_EQ(Endpoint::Parse("localhost:1").ToSockaddr().sin_family, AF_INET);
}

TEST(EndpointTest, RejectsMalformedText) {
  for (const char* text : {"", "host", "host:", "host:70000", "host:12x", "h:-1"}) {
    EXPECT_THROW(Endpoint::Parse(text), NetworkError) << text;
  }
  EXPECT_THROW((Endpoint{"no.such.host.invalid", 1}.ToSockaddr()), NetworkError);
}

TEST(UdpSocketTest, EphemeralBindAndLoopback) {
  UdpSocket rx = UdpSocket::Bind({"127.0.0.1", 0});
  ASSERT_NE(rx.LocalPort(), 0);
  UdpSocket tx = UdpSocket::Open();
  const std::vector<std::uint8_t> payload{1, 2, 3};
  ASSERT_TRUE(tx.SendTo(payload, Endpoint{"127.0.0.1", rx.LocalPort()}.ToSockaddr()));
  std::vector<std::uint8_t> buffer(16);
  auto n = rx.Receive(buffer, 1000);
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(*n, 3u);
  EXPECT_FALSE(rx.Receive(buffer, 10).has_value());
}

TEST(UdpSocketTest, BindingATakenPortFails) {
  UdpSocket a = UdpSocket::Bind({"127.0.0.1", 0});
  EXPECT_THROW(UdpSocket::Bind({"127.0.0.1", a.LocalPort()}), NetworkError);
}

TEST(PublisherTest, InjectedDropsShowUpAsSeqGaps) {
  const DeviceConfig leader = testing::LoadFixture("g1_leader.yaml");
  HoldSource source = HoldSource::AtHome(LeaderSchema::FromConfig(leader));
  LatestFrameCell cell;
  Subscriber subscriber({"127.0.0.1", 0}, cell);
  subscriber.Start();
  PublishOptions options;
  options.rate_hz = 200.0;
  // Drop every 7th frame, never the last few so the final seq arrives.
  options.drop = [](std::uint64_t seq) { return seq % 7 == 0 && seq < 180; };
  Publisher publisher(source, {"127.0.0.1", subscriber.port()}, options);
  publisher.Start();
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (cell.LatestSeq().value_or(0) < 200 &&
         std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(5ms);
  }
  publisher.Stop();
  std::this_thread::sleep_for(50ms);
  subscriber.Stop();

  const PublishStats stats = publisher.stats();
  ASSERT_GE(cell.LatestSeq().value_or(0), 200u);
  EXPECT_EQ(stats.injected_drops, stats.last_seq < 180 ? stats.last_seq / 7 : 179 / 7);
  EXPECT_EQ(stats.sent + stats.injected_drops, stats.ticks);
  // Loopback loses nothing else, so the gaps equal the injected drops seen
  // before the newest received frame.
  const std::uint64_t newest = *cell.LatestSeq();
  const std::uint64_t drops_before = std::min<std::uint64_t>(newest, 179) / 7;
  EXPECT_EQ(cell.seq_gaps(), drops_before);
  EXPECT_EQ(cell.accepted() + cell.seq_gaps(), newest);
  EXPECT_EQ(cell.malformed(), 0u);
  const StateFrame& f = cell.Latest()->frame;
  EXPECT_EQ(f.joint_positions.size(), leader.JointCount());
  EXPECT_EQ(f.gripper_triggers.size(), 2u);
}

TEST(PublisherTest, RejectsNonPositiveRate) {
  const DeviceConfig leader = testing::LoadFixture("g1_leader.yaml");
  HoldSource source = HoldSource::AtHome(LeaderSchema::FromConfig(leader));
  EXPECT_THROW(Publisher(source, {"127.0.0.1", 1}, {0.0, nullptr}), Error);
}

TEST(SubscriberTest, GarbageDatagramsAreCountedAsMalformed) {
  LatestFrameCell cell;
  Subscriber subscriber({"127.0.0.1", 0}, cell);
  subscriber.Start();
  UdpSocket tx = UdpSocket::Open();
  const auto to = Endpoint{"127.0.0.1", subscriber.port()}.ToSockaddr();
  tx.SendTo(std::vector<std::uint8_t>(50, 0xAB), to);
  tx.SendTo(EncodeFrame(StateFrame{}), to);
  const auto deadline = std::chrono::steady_clock::now() + 2s;
  while ((cell.malformed() < 1 || cell.accepted() < 1) &&
         std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(2ms);
  }
  subscriber.Stop();
  EXPECT_EQ(cell.malformed(), 1u);
  EXPECT_EQ(cell.accepted(), 1u);
}

// Sorted-copy oracle with nearest-rank p99.
TEST(SummarizeLatencyTest, MatchesOrderStatistics) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> dist(1.0 / 300000.0);
  for (std::size_t n : {1u, 2u, 99u, 100u, 101u, 1000u}) {
    std::vector<LatencySample> samples;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int64_t>(dist(rng));
      samples.push_back({i + 1, 0, v, v});
      values.push_back(static_cast<double>(v));
    }
    std::sort(values.begin(), values.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    const double median =
        n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    std::size_t rank = 0;
    while (100 * (rank + 1) < 99 * n) ++rank;  // smallest rank covering 99%
    const LatencyReport r = SummarizeLatency(samples, n);
    EXPECT_NEAR(r.mean_ns, mean, 1e-6 * mean + 1e-9) << n;
    EXPECT_EQ(r.median_ns, median) << n;
    EXPECT_EQ(r.p99_ns, values[rank]) << n;
    EXPECT_EQ(r.max_ns, values.back());
    EXPECT_EQ(r.loss_fraction, 0.0);
  }
}

TEST(SummarizeLatencyTest, LossFractionAndInsufficientSamples) {
  std::vector<LatencySample> samples(90, LatencySample{0, 0, 1000, 1000});
  EXPECT_DOUBLE_EQ(SummarizeLatency(samples, 100).loss_fraction, 0.1);
  EXPECT_THROW(SummarizeLatency({}, 10), InsufficientSamples);
  EXPECT_THROW(SummarizeLatency(samples, 0), InsufficientSamples);
  EXPECT_THROW(SummarizeLatency(std::vector<LatencySample>(10), 100),
               InsufficientSamples);
}

TEST(LatencyProbeTest, ZeroDurationRaises) {
  LatencyProbeOptions options;
  options.duration_s = 0.0;
  options.receive.port = 0;
  EXPECT_THROW(RunLatencyProbe(options), InsufficientSamples);
  EXPECT_THROW(RunInMemoryLatencyProbe(0.0, 100.0), InsufficientSamples);
}

TEST(LatencyProbeTest, LoopbackProducesOneSamplePerTick) {
  LatencyProbeOptions options;
  options.duration_s = 1.0;
  options.rate_hz = 100.0;
  options.receive.port = 0;
  const LatencyReport r = RunLatencyProbe(options);
  EXPECT_EQ(r.expected, 100u);
  EXPECT_EQ(r.received, 100u);
  EXPECT_EQ(r.loss_fraction, 0.0);
  EXPECT_GT(r.mean_ns, 0.0);
  EXPECT_LT(r.median_ns, 5e6);
  EXPECT_GE(r.elapsed_s, 0.98);
  const std::string json = r.ToJson();
  EXPECT_NE(json.find("\"received\": 100"), std::string::npos);
}

TEST(LatencyProbeTest, InMemoryMedianUnderOneMillisecond) {
  const LatencyReport r = RunInMemoryLatencyProbe(1.0, 200.0);
  EXPECT_EQ(r.received, 200u);
  EXPECT_LT(r.median_ns, 1e6);
}

TEST(LatencyProbeTest, EchoModeHalvesTheRoundTrip) {
  std::uint16_t port;
  {
    UdpSocket probe = UdpSocket::Bind({"127.0.0.1", 0});
    port = probe.LocalPort();
  }
  std::jthread echo([port](std::stop_token stop) {
    RunEchoServer({"127.0.0.1", port}, stop);
  });
  std::this_thread::sleep_for(50ms);
  LatencyProbeOptions options;
  options.duration_s = 0.5;
  options.rate_hz = 100.0;
  options.echo_server = Endpoint{"127.0.0.1", port};
  const LatencyReport r = RunLatencyProbe(options);
  EXPECT_EQ(r.received, 50u);
  EXPECT_LT(r.median_ns, 5e6);
}

}  // namespace
}  // namespace child
