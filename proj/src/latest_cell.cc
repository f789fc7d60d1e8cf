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

#include "child/latest_cell.h"

namespace child {

bool LatestFrameCell::Offer(StateFrame frame, std::int64_t recv_ns) {
  const bool had_value = has_value_.load(std::memory_order_relaxed);
  if (had_value && frame.seq <= writer_seq_) {
    dropped_.fetch_add(1, std::memory_order_relaxed);
    return false;
  }
  if (had_value) {
    gaps_.fetch_add(frame.seq - writer_seq_ - 1, std::memory_order_relaxed);
  }
  writer_seq_ = frame.seq;
  auto next = std::make_shared<const ReceivedFrame>(
      ReceivedFrame{std::move(frame), recv_ns});
  std::atomic_store_explicit(&current_, std::move(next),
                             std::memory_order_release);
  has_value_.store(true, std::memory_order_release);
  accepted_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

std::shared_ptr<const ReceivedFrame> LatestFrameCell::Latest() const {
  return std::atomic_load_explicit(&current_, std::memory_order_acquire);
}

std::optional<std::uint64_t> LatestFrameCell::LatestSeq() const {
  auto latest = Latest();
  if (!latest) return std::nullopt;
  return latest->frame.seq;
}

std::optional<std::int64_t> LatestFrameCell::AgeNs(std::int64_t now_ns) const {
  auto latest = Latest();
  if (!latest) return std::nullopt;
  return now_ns - latest->recv_ns;
}

bool LatestFrameCell::Stale(std::int64_t now_ns,
                            std::int64_t timeout_ns) const {
  auto age = AgeNs(now_ns);
  return !age || *age > timeout_ns;
}

}  // namespace child
