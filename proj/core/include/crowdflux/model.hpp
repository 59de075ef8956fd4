// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "crowdflux/advect.hpp"
#include "crowdflux/codebook.hpp"
#include "crowdflux/config.hpp"

namespace crowdflux {

/// A trained group plus what is needed to check that detection input
/// matches it.
///
/// Text layout, one item per line:
///
///   crowdflux-model 1
///   lambda <double>
///   clip <T>
///   atoms <d>
///   dictionaries <s>
///   grid <rows> <cols>
///   frame <width> <height>
///   seed <uint64>
///   uncovered <count>
///   config <line count>
///   <key=value> ...
///   dictionary <id>
///   <T rows of d doubles, row-major> ...
///   end
///
/// Doubles are written in shortest round-trip form, so save/load is exact.
struct Model {
  GroupDictionary group;
  GridSpec grid;
  PipelineConfig config;
  std::size_t uncovered = 0;

  int clip() const noexcept { return group.word_length(); }
};

inline constexpr int kModelFormatVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// Throws kModelMismatch when the model's T or grid disagrees with the
/// config applied to frames of the given size.
void check_model(const Model& model, const PipelineConfig& config, int frame_width, int frame_height);

}  // namespace crowdflux
