// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

using Field = std::variant<int PipelineConfig::*, double PipelineConfig::*, bool PipelineConfig::*,
                           std::uint64_t PipelineConfig::*>;

struct KeyDef {
  const char* name;
  Field field;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"grid", &PipelineConfig::grid},
      {"block_pixels", &PipelineConfig::block_pixels},
      {"top_pixels", &PipelineConfig::top_pixels},
      {"clip", &PipelineConfig::clip},
      {"stride", &PipelineConfig::stride},
      {"normalize", &PipelineConfig::normalize},
      {"k", &PipelineConfig::k},
      {"tau0", &PipelineConfig::tau0},
      {"fps", &PipelineConfig::fps},
      {"tau_max", &PipelineConfig::tau_max},
      {"tau_min", &PipelineConfig::tau_min},
      {"radius", &PipelineConfig::radius},
      {"cutoff", &PipelineConfig::cutoff},
      {"lambda", &PipelineConfig::lambda},
      {"atoms", &PipelineConfig::atoms},
      {"max_dicts", &PipelineConfig::max_dicts},
      {"epochs", &PipelineConfig::epochs},
      {"coverage", &PipelineConfig::coverage},
      {"trim", &PipelineConfig::trim},
      {"pool", &PipelineConfig::pool},
      {"delta", &PipelineConfig::delta},
      {"passes", &PipelineConfig::passes},
      {"global_min_words", &PipelineConfig::global_min_words},
      {"update", &PipelineConfig::update},
      {"strict_flo", &PipelineConfig::strict_flo},
      {"seed", &PipelineConfig::seed},
      {"threads", &PipelineConfig::threads},
  };
  return table;
}

const KeyDef& find_key(std::string_view key) {
  for (const auto& def : key_table()) {
    if (key == def.name) return def;
  }
  throw Error(ErrorCode::kParse, "unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, "bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::kParse, "bad boolean '" + std::string(text) + "' for key '" + std::string(key) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (grid < 1) fail("grid must be at least 1");
  if (block_pixels < 0) fail("block_pixels must be non-negative");
  if (top_pixels < 1) fail("top_pixels must be at least 1");
  if (clip < 2) fail("clip must be at least 2");
  if (stride < 0) fail("stride must be non-negative");
  if (stride > clip) fail("stride larger than clip would leave frames uncovered");
  if (!(fps > 0.0)) fail("fps must be positive");
  if (!(k > 0.0)) fail("k must be positive");
  if (!(tau0 > 0.0)) fail("tau0 must be positive");
  if (!(tau_min > 0.0)) fail("tau_min must be positive");
  if (radius < 0.0) fail("radius must be non-negative");
  if (cutoff < 0.0) fail("cutoff must be non-negative");
  if (pool < 1) fail("pool must be at least 1");
  if (!(delta > 0.0)) fail("delta must be positive");
  if (passes < 1) fail("passes must be at least 1");
  if (global_min_words < 0) fail("global_min_words must be non-negative");
  if (threads < 0) fail("threads must be non-negative");
  if (2 * atoms > clip) fail("atoms must not exceed clip / 2");
  train_params().validate();
}

GridSpec PipelineConfig::grid_for(int frame_width, int frame_height) const {
  return block_pixels > 0 ? make_grid_from_block(frame_width, frame_height, block_pixels)
                          : make_grid(frame_width, frame_height, grid);
}

InteractionParams PipelineConfig::interaction(const GridSpec& g) const {
  const double r = radius > 0.0 ? radius : 0.5 * std::min(g.cell_width, g.cell_height);
  InteractionParams p = InteractionParams::from_seconds(k, tau0, fps, r, tau_max, tau_min);
  p.cutoff = cutoff;
  p.validate();
  return p;
}

TrainParams PipelineConfig::train_params() const {
  TrainParams p;
  p.lambda = lambda;
  p.atoms = atoms;
  p.max_dictionaries = max_dicts;
  p.epochs = epochs;
  p.seed = seed;
  p.coverage = coverage;
  p.trim_fraction = trim;
  return p;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& def : key_table()) out.emplace_back(def.name);
    return out;
  }();
  return keys;
}

const std::vector<std::string>& profile_names() {
  static const std::vector<std::string> names = {"umn", "ucsd", "web"};
  return names;
}

void apply_profile(PipelineConfig& c, std::string_view profile) {
  if (profile == "umn") {
    c.grid = 20;
    c.block_pixels = 0;
    c.lambda = 0.08;
    c.k = 1.5;
    c.tau0 = 3.0;
    c.clip = 30;
    c.pool = 4000;
  } else if (profile == "ucsd") {
    c.grid = 10;
    c.block_pixels = 0;
    c.lambda = 0.06;
    c.k = 1.5;
    c.tau0 = 2.0;
    c.clip = 20;
    c.pool = 2000;
  } else if (profile == "web") {
    c.grid = 20;
    c.block_pixels = 0;
    c.lambda = 0.04;
    c.k = 1.5;
    c.tau0 = 2.0;
    c.clip = 20;
    c.pool = 2000;
  } else {
    throw Error(ErrorCode::kParse, "unknown profile '" + std::string(profile) + "' (umn, ucsd, web)");
  }
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  const KeyDef& def = find_key(key);
  value = trim(value);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          config.*member = parse_bool(key, value);
        } else {
          config.*member = parse_number<T>(key, value);
        }
      },
      def.field);
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) {
  const KeyDef& def = find_key(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          return config.*member ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(config.*member);
        } else {
          return std::to_string(config.*member);
        }
      },
      def.field);
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string profile;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "config line " + std::to_string(line_no) + " is not key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key == "profile") {
      profile = value;
    } else {
      find_key(key);
      entries.emplace_back(std::move(key), std::move(value));
    }
  }
  if (!profile.empty()) apply_profile(config, profile);
  for (const auto& [key, value] : entries) set_config_value(config, key, value);
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str());
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& def : key_table()) {
    out += def.name;
    out += '=';
    out += get_config_value(config, def.name);
    out += '\n';
  }
  return out;
}

}  // namespace crowdflux
