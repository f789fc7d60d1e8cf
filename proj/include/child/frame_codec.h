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

#ifndef CHILD_FRAME_CODEC_H_
#define CHILD_FRAME_CODEC_H_

// Fixed-layout little-endian wire format for leader state frames:
//
//   magic(2) version(1) flags(1) seq(8) stamp_ns(8) n_joints(2)
//   n_grippers(1) positions(4*n) velocities(4*n) triggers(4*g) quat(4*4)
//   crc32(4)
//
// The crc32 (IEEE) covers every byte before it. See docs/wire_format.md.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "child/error.h"

namespace child {

inline constexpr std::uint8_t kFrameMagic0 = 0x43;  // 'C'
inline constexpr std::uint8_t kFrameMagic1 = 0x48;  // 'H'
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 23;
inline constexpr std::size_t kFrameQuatSize = 16;
inline constexpr std::size_t kFrameCrcSize = 4;
inline constexpr std::size_t kMinFrameSize =
    kFrameHeaderSize + kFrameQuatSize + kFrameCrcSize;
inline constexpr std::size_t kMaxFrameJoints = 65535;
inline constexpr std::size_t kMaxFrameGrippers = 255;

// Flag bits.
inline constexpr std::uint8_t kFlagLatencyProbe = 0x01;

struct StateFrame {
  std::uint64_t seq = 0;
  std::int64_t stamp_ns = 0;
  std::uint8_t flags = 0;
  std::vector<float> joint_positions;
  std::vector<float> joint_velocities;
  std::vector<float> gripper_triggers;
  // Unit quaternion, (w, x, y, z).
  std::array<float, 4> orientation{1.0f, 0.0f, 0.0f, 0.0f};

  bool operator==(const StateFrame&) const = default;
};

class EncodeError : public Error {
 public:
  explicit EncodeError(const std::string& message)
      : Error("transport", "EncodeError: " + message) {}
};

// Empty string when the frame satisfies every invariant, else a reason.
std::string FrameInvariantViolation(const StateFrame& frame);

std::size_t EncodedFrameSize(std::size_t n_joints, std::size_t n_grippers);

// Throws EncodeError on an invalid frame or oversize counts.
std::vector<std::uint8_t> EncodeFrame(const StateFrame& frame);
void EncodeFrameInto(const StateFrame& frame, std::vector<std::uint8_t>& out);

enum class DecodeStatus {
  kOk,
  kBadMagic,
  kBadVersion,
  kBadCrc,
  kBadLength,
  kInvariant,
};

std::string_view ToString(DecodeStatus status);

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kBadLength;
  StateFrame frame;
  std::string detail;

  bool ok() const { return status == DecodeStatus::kOk; }
};

// Never throws; every malformed input maps to a distinct status.
DecodeResult DecodeFrame(std::span<const std::uint8_t> bytes);

std::uint32_t Crc32(std::span<const std::uint8_t> bytes);

}  // namespace child

#endif  // CHILD_FRAME_CODEC_H_
