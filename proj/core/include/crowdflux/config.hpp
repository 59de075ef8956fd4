// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crowdflux/advect.hpp"
#include "crowdflux/codebook.hpp"
#include "crowdflux/force.hpp"

namespace crowdflux {

/// Every tunable of the train/detect path. Keys in the key=value file and on
/// the command line share the names listed in config_keys().
struct PipelineConfig {
  // grid
  int grid = 20;          // b: cells per side (n = b*b)
  int block_pixels = 0;   // >0 selects square cells of this many pixels instead
  int top_pixels = 5;     // s: fastest pixels averaged into the characteristic particle

  // clips
  int clip = 30;          // T: frames per visual word
  int stride = 0;         // frames between clip starts, 0 = clip (no overlap)
  bool normalize = false; // scale each word to unit norm

  // interaction
  double k = 1.5;
  double tau0 = 3.0;      // seconds
  double fps = 30.0;
  double tau_max = 0.0;   // frames, 0 = 3 * tau0
  double tau_min = 0.1;   // frames
  double radius = 0.0;    // pixels, 0 = half the smaller cell side
  double cutoff = 0.0;    // pixels, 0 = all pairs

  // codebook
  double lambda = 0.08;
  int atoms = 10;
  int max_dicts = 64;
  int epochs = 10;
  double coverage = 0.99;
  double trim = 0.1;
  int pool = 4000;               // n_pool
  double delta = 1e-4;
  int passes = 1;
  int global_min_words = 0;      // 0 = pool
  bool update = true;

  // runtime
  bool strict_flo = false;       // reject non-finite flow instead of zeroing it
  std::uint64_t seed = 1;
  int threads = 0;               // 0 = CROWDFLUX_THREADS or hardware

  void validate() const;

  GridSpec grid_for(int frame_width, int frame_height) const;
  InteractionParams interaction(const GridSpec& grid) const;
  TrainParams train_params() const;
  int effective_stride() const noexcept { return stride > 0 ? stride : clip; }
  std::size_t effective_global_min_words() const noexcept {
    return static_cast<std::size_t>(global_min_words > 0 ? global_min_words : pool);
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

const std::vector<std::string>& config_keys();
const std::vector<std::string>& profile_names();

/// Overrides matching keys of the named profile (umn, ucsd, web).
void apply_profile(PipelineConfig& config, std::string_view profile);

/// Sets one key from its textual value. Throws kParse for an unknown key or
/// a malformed value.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// key=value lines, '#' comments. A `profile` key is applied first, wherever
/// it appears, so explicit keys win over it.
void apply_config_text(PipelineConfig& config, std::string_view text);
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// All keys in config_keys() order, one per line; round-trips exactly.
std::string format_config(const PipelineConfig& config);

}  // namespace crowdflux
