// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "crowdflux/error.hpp"
#include "crowdflux/rng.hpp"

namespace crowdflux {
namespace {

constexpr double kDegree = std::numbers::pi / 180.0;
constexpr double kWalkerSteer = 4.0 * kDegree;
constexpr double kWalkerJitter = 1.0 * kDegree;
constexpr double kRunnerJitter = 2.0 * kDegree;
constexpr double kIntruderJitter = 1.0 * kDegree;
constexpr double kHomeFraction = 0.25;
constexpr double kMinPace = 0.25;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double wrap_coord(double value, double extent) {
  value = std::fmod(value, extent);
  return value < 0.0 ? value + extent : value;
}

Vec2 heading_vector(double heading, double speed) { return {speed * std::cos(heading), speed * std::sin(heading)}; }

struct AgentSim {
  Rng rng;
  AgentState state{};
  double heading = 0.0;
  double speed = 0.0;
  double pace = 1.0;  // walkers slow down while turning toward a waypoint behind them
  Vec2 waypoint{};
  Vec2 home_lo{};
  Vec2 home_hi{};
};

// Walkers mill around inside their own slot of a lattice laid over the
// frame, so normal crowds rarely bump into each other.
void assign_home(AgentSim& sim, int index, int count, const ScenarioConfig& c) {
  const double W = c.width, H = c.height;
  const int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(count * W / H))));
  const int rows = (count + cols - 1) / cols;
  const double sx = W / cols, sy = H / rows;
  const Vec2 center{(index % cols + 0.5) * sx, (index / cols + 0.5) * sy};
  const double hx = std::max(0.0, kHomeFraction * sx), hy = std::max(0.0, kHomeFraction * sy);
  sim.home_lo = {center.x - hx, center.y - hy};
  sim.home_hi = {center.x + hx, center.y + hy};
}

Vec2 home_point(AgentSim& sim) {
  return {sim.rng.uniform(sim.home_lo.x, sim.home_hi.x), sim.rng.uniform(sim.home_lo.y, sim.home_hi.y)};
}

bool intruder_visible(const AgentState& s, const ScenarioConfig& c) {
  return s.active && s.position.x - s.radius <= c.width - 1.0 && s.position.x + s.radius >= 0.0;
}

}  // namespace

std::string_view to_string(Preset preset) noexcept {
  switch (preset) {
    case Preset::kNormal: return "normal";
    case Preset::kPanic: return "panic";
    case Preset::kIntruder: return "intruder";
  }
  return "normal";
}

Preset parse_preset(std::string_view name) {
  if (name == "normal") return Preset::kNormal;
  if (name == "panic") return Preset::kPanic;
  if (name == "intruder") return Preset::kIntruder;
  throw Error(ErrorCode::kInvalidConfig, "unknown preset '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (width < 1 || height < 1) fail("frame size must be positive");
  if (frames < 2) fail("a scenario needs at least 2 frames");
  if (agents < 1) fail("a scenario needs at least one agent");
  if (!(v_walk >= 0.0) || !std::isfinite(v_walk)) fail("v_walk must be finite and non-negative");
  if (!(agent_radius > 0.0)) fail("agent_radius must be positive");
  if (preset == Preset::kPanic && !(effective_panic_speed() >= 0.0)) fail("panic_speed must be non-negative");
  if (preset == Preset::kIntruder) {
    const double vi = effective_intruder_speed();
    if (!(vi > v_walk) || vi < 2.0 * v_walk) fail("intruder speed must be at least 2 * v_walk");
  }
}

ScenarioConfig parse_scenario_config(std::string_view text) {
  ScenarioConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      if (key == "preset") c.preset = parse_preset(value);
      else if (key == "width") c.width = std::stoi(value);
      else if (key == "height") c.height = std::stoi(value);
      else if (key == "frames") c.frames = std::stoi(value);
      else if (key == "agents") c.agents = std::stoi(value);
      else if (key == "v_walk") c.v_walk = std::stod(value);
      else if (key == "agent_radius") c.agent_radius = std::stod(value);
      else if (key == "t_anomaly") c.t_anomaly = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "panic_speed") c.panic_speed = std::stod(value);
      else if (key == "intruder_speed") c.intruder_speed = std::stod(value);
      else throw Error(ErrorCode::kInvalidConfig, "unknown scenario key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidConfig, "bad value for '" + key + "': " + value);
    }
  }
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_config(buf.str());
}

std::string format_scenario_config(const ScenarioConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "preset=" << to_string(c.preset) << '\n'
      << "width=" << c.width << '\n'
      << "height=" << c.height << '\n'
      << "frames=" << c.frames << '\n'
      << "agents=" << c.agents << '\n'
      << "v_walk=" << c.v_walk << '\n'
      << "agent_radius=" << c.agent_radius << '\n'
      << "t_anomaly=" << c.t_anomaly << '\n'
      << "seed=" << c.seed << '\n'
      << "panic_speed=" << c.panic_speed << '\n'
      << "intruder_speed=" << c.intruder_speed << '\n';
  return out.str();
}

bool Scenario::abnormal(int frame) const {
  if (frame < 0 || frame >= frame_count()) throw Error(ErrorCode::kIndexOutOfRange, "frame out of range");
  switch (config.preset) {
    case Preset::kNormal: return false;
    case Preset::kPanic: return frame >= config.t_anomaly;
    case Preset::kIntruder: return intruder >= 0 && intruder_visible(states[frame][intruder], config);
  }
  return false;
}

Scenario simulate_scenario(ScenarioConfig config, std::uint64_t seed) {
  config.seed = seed;
  config.validate();

  const bool with_intruder = config.preset == Preset::kIntruder;
  const int total = config.agents + (with_intruder ? 1 : 0);

  Rng scene_rng(seed, 0);
  const Vec2 panic_origin{scene_rng.uniform(config.width / 3.0, 2.0 * config.width / 3.0),
                          scene_rng.uniform(config.height / 3.0, 2.0 * config.height / 3.0)};

  std::vector<AgentSim> sims;
  sims.reserve(static_cast<std::size_t>(total));
  for (int a = 0; a < config.agents; ++a) {
    AgentSim sim{.rng = Rng(seed, static_cast<std::uint64_t>(a) + 1)};
    assign_home(sim, a, config.agents, config);
    sim.state.position = home_point(sim);
    sim.waypoint = home_point(sim);
    sim.state.radius = config.agent_radius;
    sim.speed = config.v_walk * sim.rng.uniform(0.6, 1.0);
    const Vec2 to_wp = sim.waypoint - sim.state.position;
    sim.heading = std::atan2(to_wp.y, to_wp.x);
    sims.push_back(std::move(sim));
  }
  if (with_intruder) {
    AgentSim sim{.rng = Rng(seed, static_cast<std::uint64_t>(total) + 1)};
    sim.state.behavior = Behavior::kFastIntruder;
    sim.state.radius = config.agent_radius;
    sim.state.active = false;
    sim.speed = config.effective_intruder_speed();
    sims.push_back(std::move(sim));
  }

  Scenario scenario;
  scenario.config = config;
  scenario.intruder = with_intruder ? config.agents : -1;
  scenario.states.assign(static_cast<std::size_t>(config.frames), std::vector<AgentState>(static_cast<std::size_t>(total)));

  const double waypoint_reach = std::max(2.0 * config.agent_radius, 4.0);
  for (int f = 0; f < config.frames; ++f) {
    for (int a = 0; a < total; ++a) {
      AgentSim& sim = sims[static_cast<std::size_t>(a)];
      AgentState& st = sim.state;

      switch (st.behavior) {
        case Behavior::kWaypointWalker: {
          if (config.preset == Preset::kPanic && f >= config.t_anomaly) {
            st.behavior = Behavior::kPanicRunner;
            const Vec2 away = st.position - panic_origin;
            sim.heading = squared_norm(away) > 0.0 ? std::atan2(away.y, away.x)
                                                    : sim.rng.uniform(-std::numbers::pi, std::numbers::pi);
            sim.speed = config.effective_panic_speed() * sim.rng.uniform(0.85, 1.0);
            sim.pace = 1.0;
            break;
          }
          if (norm(sim.waypoint - st.position) < waypoint_reach) sim.waypoint = home_point(sim);
          const Vec2 to_wp = sim.waypoint - st.position;
          const double desired = std::atan2(to_wp.y, to_wp.x);
          const double steer = std::clamp(wrap_angle(desired - sim.heading), -kWalkerSteer, kWalkerSteer);
          sim.heading = wrap_angle(sim.heading + steer + sim.rng.uniform(-kWalkerJitter, kWalkerJitter));
          sim.pace = std::max(kMinPace, std::cos(wrap_angle(desired - sim.heading)));
          break;
        }
        case Behavior::kPanicRunner:
          sim.heading = wrap_angle(sim.heading + sim.rng.uniform(-kRunnerJitter, kRunnerJitter));
          break;
        case Behavior::kFastIntruder:
          if (f == config.t_anomaly) {
            st.active = true;
            st.position = {0.0, sim.rng.uniform(0.3, 0.7) * (config.height - 1.0)};
            sim.heading = sim.rng.uniform(-5.0, 5.0) * kDegree;
          } else if (st.active) {
            sim.heading = std::clamp(sim.heading + sim.rng.uniform(-kIntruderJitter, kIntruderJitter),
                                     -10.0 * kDegree, 10.0 * kDegree);
          }
          if (st.active && st.position.x - st.radius > config.width - 1.0) st.active = false;
          break;
      }

      st.velocity = st.active ? heading_vector(sim.heading, sim.speed * sim.pace) : Vec2{};
      scenario.states[static_cast<std::size_t>(f)][static_cast<std::size_t>(a)] = st;

      if (!st.active) continue;
      st.position += st.velocity;
      if (st.behavior == Behavior::kFastIntruder) {
        // The intruder leaves the scene instead of wrapping around.
        st.position.y = wrap_coord(st.position.y, config.height);
      } else {
        st.position = {wrap_coord(st.position.x, config.width), wrap_coord(st.position.y, config.height)};
      }
    }
  }
  return scenario;
}

FlowField rasterize_flow(const Scenario& scenario, int frame_index) {
  if (frame_index < 0 || frame_index >= scenario.frame_count() - 1) {
    throw Error(ErrorCode::kIndexOutOfRange, "flow frame " + std::to_string(frame_index) + " out of range");
  }
  const auto& cfg = scenario.config;
  FlowField field(cfg.width, cfg.height);
  std::vector<double> best(field.pixel_count(), std::numeric_limits<double>::infinity());

  const auto& agents = scenario.states[static_cast<std::size_t>(frame_index)];
  for (const AgentState& agent : agents) {
    if (!agent.active) continue;
    const double r = agent.radius;
    const int x_lo = std::max(0, static_cast<int>(std::ceil(agent.position.x - r)));
    const int x_hi = std::min(cfg.width - 1, static_cast<int>(std::floor(agent.position.x + r)));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(agent.position.y - r)));
    const int y_hi = std::min(cfg.height - 1, static_cast<int>(std::floor(agent.position.y + r)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double d2 = squared_norm(Vec2{x - agent.position.x, y - agent.position.y});
        if (d2 > r * r) continue;
        const std::size_t i = field.index(x, y);
        if (d2 < best[i]) {
          best[i] = d2;
          field.set(x, y, agent.velocity);
        }
      }
    }
  }
  return field;
}

GrayImage truth_mask(const Scenario& scenario, int frame_index) {
  const auto& cfg = scenario.config;
  GrayImage mask(cfg.width, cfg.height);
  if (!scenario.abnormal(frame_index)) return mask;
  if (cfg.preset == Preset::kPanic) {
    std::fill(mask.pixels.begin(), mask.pixels.end(), std::uint8_t{255});
    return mask;
  }
  const AgentState& intruder =
      scenario.states[static_cast<std::size_t>(frame_index)][static_cast<std::size_t>(scenario.intruder)];
  const double r = intruder.radius;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      if (squared_norm(Vec2{x - intruder.position.x, y - intruder.position.y}) <= r * r) {
        mask.pixels[static_cast<std::size_t>(y) * cfg.width + x] = 255;
      }
    }
  }
  // A disc clipped at the border can momentarily cover no pixel center; mark
  // the nearest border pixel so the mask stays nonempty on abnormal frames.
  if (mask.empty_mask()) {
    const int x = std::clamp(static_cast<int>(std::lround(intruder.position.x)), 0, cfg.width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(intruder.position.y)), 0, cfg.height - 1);
    mask.pixels[static_cast<std::size_t>(y) * cfg.width + x] = 255;
  }
  return mask;
}

double mean_closing_speed(const Scenario& scenario, int frame_index) {
  if (frame_index < 0 || frame_index >= scenario.frame_count()) {
    throw Error(ErrorCode::kIndexOutOfRange, "frame out of range");
  }
  const auto& agents = scenario.states[static_cast<std::size_t>(frame_index)];
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!agents[i].active) continue;
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (!agents[j].active) continue;
      const Vec2 w = agents[j].position - agents[i].position;
      const Vec2 v = agents[j].velocity - agents[i].velocity;
      const double dist = norm(w);
      if (dist > 0.0) sum += std::max(0.0, -dot(w, v) / dist);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  fs::create_directories(out / "gt");
  {
    std::ofstream cfg(out / "scenario.cfg");
    if (!cfg) throw Error(ErrorCode::kIo, "cannot write " + (out / "scenario.cfg").string());
    cfg << format_scenario_config(scenario.config);
  }
  for (int f = 0; f + 1 < scenario.frame_count(); ++f) {
    write_flo_file(out / flow_frame_name(f), rasterize_flow(scenario, f));
    write_pgm(out / "gt" / truth_mask_name(f), truth_mask(scenario, f));
  }
}

}  // namespace crowdflux
