// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crowdflux/geometry.hpp"

namespace crowdflux {

/// Dense forward optical flow from frame i to frame i+1, in pixels/frame.
/// Row-major, top row first; pixel (x, y) has its center at (x, y).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  /// Zero field of the given size.
  FlowField(int width, int height);

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  Vec2 at(int x, int y) const noexcept {
    const std::size_t i = index(x, y);
    return {u[i], v[i]};
  }
  void set(int x, int y, Vec2 value) noexcept {
    const std::size_t i = index(x, y);
    u[i] = static_cast<float>(value.x);
    v[i] = static_cast<float>(value.y);
  }

  /// Size and finiteness checks.
  bool valid() const noexcept;

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Tag that opens every Middlebury .flo file ("PIEH" as bytes).
inline constexpr float kFloTag = 202021.25f;
/// Values with a larger magnitude are the format's "unknown flow" marker.
inline constexpr double kUnknownFlowThreshold = 1e9;

enum class NonFinitePolicy { kZero, kReject };

struct FloReadOptions {
  NonFinitePolicy non_finite = NonFinitePolicy::kZero;
};

struct FloReadStats {
  std::size_t zeroed = 0;
};

/// Decodes a little-endian .flo container. Throws Error with kBadMagic,
/// kTruncated, or (strict mode) kNonFiniteFlow.
FlowField read_flo(std::span<const std::byte> bytes, const FloReadOptions& options = {},
                   FloReadStats* stats = nullptr);

/// Byte-exact inverse of read_flo: 12 + 8*width*height bytes.
std::vector<std::byte> write_flo(const FlowField& field);

FlowField read_flo_file(const std::filesystem::path& path, const FloReadOptions& options = {},
                        FloReadStats* stats = nullptr);
void write_flo_file(const std::filesystem::path& path, const FlowField& field);

/// Bilinear sample at a subpixel position. Coordinates outside the frame are
/// clamped to the border.
Vec2 sample_flow(const FlowField& field, double x, double y) noexcept;

/// "frame_%06d.flo"
std::string flow_frame_name(int index);

/// The frame_%06d.flo files of a directory, ordered by index. Throws kIo
/// when the directory does not exist.
std::vector<std::filesystem::path> list_flow_frames(const std::filesystem::path& directory);

}  // namespace crowdflux
