// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace crowdflux {

/// 8-bit single channel image; used for binary masks (0 normal, 255 abnormal).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t count_nonzero() const noexcept;
  bool empty_mask() const noexcept { return count_nonzero() == 0; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary (P5) PGM with maxval 255.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// "gt_%06d.pgm" and "det_%06d.pgm".
std::string truth_mask_name(int frame);
std::string detection_mask_name(int frame);

}  // namespace crowdflux
