// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crowdflux/flow_io.hpp"
#include "crowdflux/geometry.hpp"
#include "crowdflux/pgm.hpp"

namespace crowdflux {

// Synthetic crowd scenarios: agent trajectories, their rasterized flow, and
// ground-truth anomaly masks.

enum class Preset { kNormal, kPanic, kIntruder };
enum class Behavior { kWaypointWalker, kPanicRunner, kFastIntruder };

std::string_view to_string(Preset preset) noexcept;
Preset parse_preset(std::string_view name);

struct ScenarioConfig {
  Preset preset = Preset::kNormal;
  int width = 320;
  int height = 240;
  int frames = 1001;
  int agents = 60;
  double v_walk = 1.0;        // pixels/frame, upper bound on walker speed
  double agent_radius = 5.0;  // pixels
  int t_anomaly = 750;        // first abnormal frame (panic onset, intruder entry)
  std::uint64_t seed = 1;
  double panic_speed = 0.0;     // 0 selects 3 * v_walk
  double intruder_speed = 0.0;  // 0 selects 4 * v_walk

  double effective_panic_speed() const noexcept { return panic_speed > 0.0 ? panic_speed : 3.0 * v_walk; }
  double effective_intruder_speed() const noexcept {
    return intruder_speed > 0.0 ? intruder_speed : 4.0 * v_walk;
  }

  /// Throws kInvalidConfig.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// key=value lines; '#' starts a comment. Unknown keys are kInvalidConfig.
ScenarioConfig parse_scenario_config(std::string_view text);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);
std::string format_scenario_config(const ScenarioConfig& config);

struct AgentState {
  Vec2 position;
  Vec2 velocity;  // displacement to the next frame
  double radius = 0.0;
  Behavior behavior = Behavior::kWaypointWalker;
  bool active = true;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct Scenario {
  ScenarioConfig config;
  /// states[frame][agent]. The intruder, when present, is the last agent
  /// and is inactive outside its crossing.
  std::vector<std::vector<AgentState>> states;
  int intruder = -1;

  int frame_count() const noexcept { return static_cast<int>(states.size()); }
  int agent_count() const noexcept { return states.empty() ? 0 : static_cast<int>(states.front().size()); }

  /// Ground-truth frame label; true exactly when the truth mask is nonempty.
  bool abnormal(int frame) const;
};

/// Deterministic in (config, seed); `seed` overrides config.seed.
Scenario simulate_scenario(ScenarioConfig config, std::uint64_t seed);
inline Scenario simulate_scenario(const ScenarioConfig& config) { return simulate_scenario(config, config.seed); }

/// Hard-disc splat of agent velocities; contested pixels go to the nearest
/// agent center (lower index on exact ties). Valid for frame_index in
/// [0, frame_count - 1).
FlowField rasterize_flow(const Scenario& scenario, int frame_index);

/// 255 on abnormal pixels: the whole frame during panic, the intruder's disc
/// while it crosses.
GrayImage truth_mask(const Scenario& scenario, int frame_index);

/// Mean over active agent pairs of max(0, closing speed).
double mean_closing_speed(const Scenario& scenario, int frame_index);

/// Writes frame_%06d.flo for every flow frame into `out`, gt_%06d.pgm into
/// `out`/gt, and a copy of the config as `out`/scenario.cfg.
void write_scenario(const Scenario& scenario, const std::filesystem::path& out);

}  // namespace crowdflux
