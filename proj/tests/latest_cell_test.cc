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

#include <atomic>
#include <thread>
#include <vector>

#include "child/latest_cell.h"

namespace child {
namespace {

StateFrame WithSeq(std::uint64_t seq, float fill = 0.0f) {
  StateFrame frame;
  frame.seq = seq;
  frame.joint_positions.assign(16, fill);
  frame.joint_velocities.assign(16, fill);
  return frame;
}

TEST(LatestFrameCellTest, EmptyCellIsStale) {
  LatestFrameCell cell;
  EXPECT_FALSE(cell.Latest());
  EXPECT_FALSE(cell.AgeNs(0).has_value());
  EXPECT_TRUE(cell.Stale(0, 200'000'000));
}

TEST(LatestFrameCellTest, LateFrameIsDiscarded) {
  LatestFrameCell cell;
  EXPECT_TRUE(cell.Offer(WithSeq(1), 10));
  EXPECT_TRUE(cell.Offer(WithSeq(3), 20));
  EXPECT_FALSE(cell.Offer(WithSeq(2), 30));
  EXPECT_EQ(cell.LatestSeq(), 3u);
  EXPECT_EQ(cell.dropped_out_of_order(), 1u);
  EXPECT_EQ(cell.accepted(), 2u);
  EXPECT_EQ(cell.seq_gaps(), 1u);
  EXPECT_EQ(cell.Latest()->recv_ns, 20);
}

TEST(LatestFrameCellTest, DuplicateSeqIsDiscarded) {
  LatestFrameCell cell;
  cell.Offer(WithSeq(5, 1.0f), 0);
  EXPECT_FALSE(cell.Offer(WithSeq(5, 2.0f), 1));
  EXPECT_EQ(cell.Latest()->frame.joint_positions[0], 1.0f);
}

TEST(LatestFrameCellTest, StalenessUsesReceiveTime) {
  LatestFrameCell cell;
  const std::int64_t timeout = 200'000'000;
  cell.Offer(WithSeq(1), 1'000'000'000);
  EXPECT_FALSE(cell.Stale(1'000'000'000, timeout));
  EXPECT_FALSE(cell.Stale(1'000'000'000 + timeout, timeout));
  EXPECT_TRUE(cell.Stale(1'000'000'001 + timeout, timeout));
  EXPECT_EQ(cell.AgeNs(1'050'000'000), 50'000'000);
}

TEST(LatestFrameCellTest, MalformedCountIsSeparate) {
  LatestFrameCell cell;
  cell.CountMalformed();
  cell.CountMalformed();
  EXPECT_EQ(cell.malformed(), 2u);
  EXPECT_EQ(cell.accepted(), 0u);
}

TEST(LatestFrameCellTest, ConcurrentReadersSeeMonotonicUntornFrames) {
  LatestFrameCell cell;
  constexpr std::uint64_t kFrames = 20000;
  std::atomic<bool> done{false};
  std::atomic<int> violations{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&] {
      std::uint64_t last = 0;
      while (!done.load()) {
        auto latest = cell.Latest();
        if (!latest) continue;
        const StateFrame& f = latest->frame;
        if (f.seq < last) ++violations;
        last = f.seq;
        // Every field carries the seq; a torn frame would mix values.
        for (float q : f.joint_positions) {
          if (q != static_cast<float>(f.seq)) ++violations;
        }
        for (float v : f.joint_velocities) {
          if (v != static_cast<float>(f.seq)) ++violations;
        }
      }
    });
  }
  for (std::uint64_t s = 1; s <= kFrames; ++s) {
    cell.Offer(WithSeq(s, static_cast<float>(s)), static_cast<std::int64_t>(s));
  }
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(violations.load(), 0);
  EXPECT_EQ(cell.LatestSeq(), kFrames);
}

}  // namespace
}  // namespace child
