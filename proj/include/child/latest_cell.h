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

#ifndef CHILD_LATEST_CELL_H_
#define CHILD_LATEST_CELL_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>

#include "child/frame_codec.h"

namespace child {

// A received frame together with the local receive time.
struct ReceivedFrame {
  StateFrame frame;
  std::int64_t recv_ns = 0;
};

// Single-writer, multi-reader latest-value cell. The writer publishes
// immutable snapshots; readers take a reference-counted copy of the current
// snapshot and never observe a partially written frame. Frames whose seq
// does not exceed the stored seq are dropped and counted.
class LatestFrameCell {
 public:
  LatestFrameCell() = default;
  LatestFrameCell(const LatestFrameCell&) = delete;
  LatestFrameCell& operator=(const LatestFrameCell&) = delete;

  // Writer side. Returns true if the frame replaced the stored one.
  bool Offer(StateFrame frame, std::int64_t recv_ns);
  // Writer side: counts an undecodable datagram.
  void CountMalformed() { malformed_.fetch_add(1, std::memory_order_relaxed); }

  std::shared_ptr<const ReceivedFrame> Latest() const;
  std::optional<std::uint64_t> LatestSeq() const;

  // Age of the newest frame, measured from its local receive time. Empty
  // when nothing has arrived yet.
  std::optional<std::int64_t> AgeNs(std::int64_t now_ns) const;
  bool Stale(std::int64_t now_ns, std::int64_t timeout_ns) const;

  std::uint64_t accepted() const { return accepted_.load(); }
  std::uint64_t dropped_out_of_order() const { return dropped_.load(); }
  std::uint64_t malformed() const { return malformed_.load(); }
  // Sum over accepted frames of (seq - previous seq - 1).
  std::uint64_t seq_gaps() const { return gaps_.load(); }

 private:
  std::shared_ptr<const ReceivedFrame> current_;
  std::atomic<bool> has_value_{false};
  std::uint64_t writer_seq_ = 0;  // touched by the writer only
  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> malformed_{0};
  std::atomic<std::uint64_t> gaps_{0};
};

}  // namespace child

#endif  // CHILD_LATEST_CELL_H_
