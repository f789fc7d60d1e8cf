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

#include "child/frame_codec.h"

#include <bit>
#include <cmath>

#include <zlib.h>

namespace child {
namespace {

template <typename T>
void PutLe(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  U bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

void PutFloat(std::vector<std::uint8_t>& out, float value) {
  PutLe(out, std::bit_cast<std::uint32_t>(value));
}

template <typename T>
T GetLe(std::span<const std::uint8_t> bytes, std::size_t offset) {
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(bytes[offset + i]) << (8 * i);
  }
  return static_cast<T>(bits);
}

float GetFloat(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return std::bit_cast<float>(GetLe<std::uint32_t>(bytes, offset));
}

std::uint32_t StoredCrc(std::span<const std::uint8_t> bytes) {
  return GetLe<std::uint32_t>(bytes, bytes.size() - kFrameCrcSize);
}

std::size_t DeclaredSize(std::span<const std::uint8_t> bytes) {
  return EncodedFrameSize(GetLe<std::uint16_t>(bytes, 20), bytes[22]);
}

// True when one flipped bit in the count fields explains both the length
// mismatch and the crc failure. Such frames are corrupt, not short.
bool CountFieldBitFlip(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> copy(bytes.begin(), bytes.end());
  for (std::size_t byte = 20; byte <= 22; ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      copy[byte] ^= static_cast<std::uint8_t>(1u << bit);
      const std::span<const std::uint8_t> view(copy);
      if (DeclaredSize(view) == view.size() &&
          Crc32(view.first(view.size() - kFrameCrcSize)) == StoredCrc(view)) {
        return true;
      }
      copy[byte] ^= static_cast<std::uint8_t>(1u << bit);
    }
  }
  return false;
}

DecodeResult Fail(DecodeStatus status, std::string detail) {
  DecodeResult result;
  result.status = status;
  result.detail = std::move(detail);
  return result;
}

}  // namespace

std::uint32_t Crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::string_view ToString(DecodeStatus status) {
  switch (status) {
    case DecodeStatus::kOk: return "Ok";
    case DecodeStatus::kBadMagic: return "BadMagic";
    case DecodeStatus::kBadVersion: return "BadVersion";
    case DecodeStatus::kBadCrc: return "BadCrc";
    case DecodeStatus::kBadLength: return "BadLength";
    case DecodeStatus::kInvariant: return "InvariantError";
  }
  return "?";
}

std::size_t EncodedFrameSize(std::size_t n_joints, std::size_t n_grippers) {
  return kFrameHeaderSize + 8 * n_joints + 4 * n_grippers + kFrameQuatSize +
         kFrameCrcSize;
}

std::string FrameInvariantViolation(const StateFrame& frame) {
  if (frame.joint_positions.size() != frame.joint_velocities.size()) {
    return "positions and velocities differ in length";
  }
  for (float q : frame.joint_positions) {
    if (!std::isfinite(q)) return "non-finite joint position";
  }
  for (float v : frame.joint_velocities) {
    if (!std::isfinite(v)) return "non-finite joint velocity";
  }
  for (float t : frame.gripper_triggers) {
    if (!(t >= 0.0f && t <= 1.0f)) return "gripper trigger outside [0, 1]";
  }
  double norm2 = 0.0;
  for (float c : frame.orientation) {
    if (!std::isfinite(c)) return "non-finite quaternion";
    norm2 += static_cast<double>(c) * static_cast<double>(c);
  }
  if (!(std::abs(std::sqrt(norm2) - 1.0) < 1e-6)) {
    return "quaternion is not unit length";
  }
  return {};
}

void EncodeFrameInto(const StateFrame& frame, std::vector<std::uint8_t>& out) {
  const std::size_t n = frame.joint_positions.size();
  const std::size_t g = frame.gripper_triggers.size();
  if (n > kMaxFrameJoints) {
    throw EncodeError("joint count " + std::to_string(n) + " exceeds 65535");
  }
  if (g > kMaxFrameGrippers) {
    throw EncodeError("gripper count " + std::to_string(g) + " exceeds 255");
  }
  if (std::string why = FrameInvariantViolation(frame); !why.empty()) {
    throw EncodeError(why);
  }
  out.clear();
  out.reserve(EncodedFrameSize(n, g));
  out.push_back(kFrameMagic0);
  out.push_back(kFrameMagic1);
  out.push_back(kFrameVersion);
  out.push_back(frame.flags);
  PutLe(out, frame.seq);
  PutLe(out, frame.stamp_ns);
  PutLe(out, static_cast<std::uint16_t>(n));
  out.push_back(static_cast<std::uint8_t>(g));
  for (float q : frame.joint_positions) PutFloat(out, q);
  for (float v : frame.joint_velocities) PutFloat(out, v);
  for (float t : frame.gripper_triggers) PutFloat(out, t);
  for (float c : frame.orientation) PutFloat(out, c);
  PutLe(out, Crc32(out));
}

std::vector<std::uint8_t> EncodeFrame(const StateFrame& frame) {
  std::vector<std::uint8_t> out;
  EncodeFrameInto(frame, out);
  return out;
}

DecodeResult DecodeFrame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMinFrameSize) {
    return Fail(DecodeStatus::kBadLength,
                "frame shorter than " + std::to_string(kMinFrameSize) +
                    " bytes");
  }
  const bool crc_ok =
      Crc32(bytes.first(bytes.size() - kFrameCrcSize)) == StoredCrc(bytes);
  const bool length_ok = DeclaredSize(bytes) == bytes.size();
  if (!crc_ok) {
    if (!length_ok && !CountFieldBitFlip(bytes)) {
      return Fail(DecodeStatus::kBadLength,
                  "size " + std::to_string(bytes.size()) +
                      " disagrees with declared counts");
    }
    return Fail(DecodeStatus::kBadCrc, "crc32 mismatch");
  }
  if (bytes[0] != kFrameMagic0 || bytes[1] != kFrameMagic1) {
    return Fail(DecodeStatus::kBadMagic, "bad magic");
  }
  if (bytes[2] != kFrameVersion) {
    return Fail(DecodeStatus::kBadVersion,
                "unsupported version " + std::to_string(bytes[2]));
  }
  if (!length_ok) {
    return Fail(DecodeStatus::kBadLength,
                "size " + std::to_string(bytes.size()) +
                    " disagrees with declared counts");
  }

  DecodeResult result;
  StateFrame& frame = result.frame;
  frame.flags = bytes[3];
  frame.seq = GetLe<std::uint64_t>(bytes, 4);
  frame.stamp_ns = GetLe<std::int64_t>(bytes, 12);
  const std::size_t n = GetLe<std::uint16_t>(bytes, 20);
  const std::size_t g = bytes[22];
  std::size_t offset = kFrameHeaderSize;
  frame.joint_positions.resize(n);
  frame.joint_velocities.resize(n);
  frame.gripper_triggers.resize(g);
  for (std::size_t i = 0; i < n; ++i, offset += 4) {
    frame.joint_positions[i] = GetFloat(bytes, offset);
  }
  for (std::size_t i = 0; i < n; ++i, offset += 4) {
    frame.joint_velocities[i] = GetFloat(bytes, offset);
  }
  for (std::size_t i = 0; i < g; ++i, offset += 4) {
    frame.gripper_triggers[i] = GetFloat(bytes, offset);
  }
  for (std::size_t i = 0; i < 4; ++i, offset += 4) {
    frame.orientation[i] = GetFloat(bytes, offset);
  }
  if (std::string why = FrameInvariantViolation(frame); !why.empty()) {
    return Fail(DecodeStatus::kInvariant, why);
  }
  result.status = DecodeStatus::kOk;
  return result;
}

}  // namespace child
