// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/flow_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename T>
T load_le(const std::byte* p) {
  std::uint32_t raw = 0;
  for (int i = 3; i >= 0; --i) raw = (raw << 8) | static_cast<std::uint32_t>(p[i]);
  return std::bit_cast<T>(raw);
}

template <typename T>
void store_le(std::byte* p, T value) {
  auto raw = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::byte>(raw & 0xffu);
    raw >>= 8;
  }
}

bool is_unknown(float value) {
  return !std::isfinite(value) || std::fabs(static_cast<double>(value)) > kUnknownFlowThreshold;
}

}  // namespace

FlowField::FlowField(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw Error(ErrorCode::kDimensionMismatch, "flow field dimensions must be positive");
  u.assign(pixel_count(), 0.0f);
  v.assign(pixel_count(), 0.0f);
}

bool FlowField::valid() const noexcept {
  if (width < 1 || height < 1) return false;
  if (u.size() != pixel_count() || v.size() != pixel_count()) return false;
  auto finite = [](float f) { return std::isfinite(f); };
  return std::all_of(u.begin(), u.end(), finite) && std::all_of(v.begin(), v.end(), finite);
}

FlowField read_flo(std::span<const std::byte> bytes, const FloReadOptions& options, FloReadStats* stats) {
  if (bytes.size() < 12) throw Error(ErrorCode::kTruncated, "file shorter than the 12-byte header");
  const auto tag = load_le<float>(bytes.data());
  if (tag != kFloTag) throw Error(ErrorCode::kBadMagic, "missing 202021.25 tag");
  const auto width = load_le<std::int32_t>(bytes.data() + 4);
  const auto height = load_le<std::int32_t>(bytes.data() + 8);
  if (width < 1 || height < 1) throw Error(ErrorCode::kTruncated, "non-positive dimensions in header");
  const std::uint64_t expected = 12 + 8ull * static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kTruncated, "expected " + std::to_string(expected) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }

  FlowField field(width, height);
  std::size_t zeroed = 0;
  const std::byte* p = bytes.data() + 12;
  for (std::size_t i = 0; i < field.pixel_count(); ++i, p += 8) {
    float fu = load_le<float>(p);
    float fv = load_le<float>(p + 4);
    if (is_unknown(fu) || is_unknown(fv)) {
      if (options.non_finite == NonFinitePolicy::kReject) {
        throw Error(ErrorCode::kNonFiniteFlow, "unknown flow at pixel " + std::to_string(i));
      }
      fu = 0.0f;
      fv = 0.0f;
      ++zeroed;
    }
    field.u[i] = fu;
    field.v[i] = fv;
  }
  if (stats) stats->zeroed = zeroed;
  return field;
}

std::vector<std::byte> write_flo(const FlowField& field) {
  if (field.width < 1 || field.height < 1 || field.u.size() != field.pixel_count() ||
      field.v.size() != field.pixel_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "flow field storage does not match its dimensions");
  }
  std::vector<std::byte> out(12 + 8 * field.pixel_count());
  store_le(out.data(), kFloTag);
  store_le(out.data() + 4, static_cast<std::int32_t>(field.width));
  store_le(out.data() + 8, static_cast<std::int32_t>(field.height));
  std::byte* p = out.data() + 12;
  for (std::size_t i = 0; i < field.pixel_count(); ++i, p += 8) {
    store_le(p, field.u[i]);
    store_le(p + 4, field.v[i]);
  }
  return out;
}

FlowField read_flo_file(const std::filesystem::path& path, const FloReadOptions& options, FloReadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_flo(std::as_bytes(std::span(raw)), options, stats);
}

void write_flo_file(const std::filesystem::path& path, const FlowField& field) {
  const auto bytes = write_flo(field);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

Vec2 sample_flow(const FlowField& field, double x, double y) noexcept {
  const double max_x = field.width - 1;
  const double max_y = field.height - 1;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, field.width - 1);
  const int y1 = std::min(y0 + 1, field.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  const Vec2 a = field.at(x0, y0);
  const Vec2 b = field.at(x1, y0);
  const Vec2 c = field.at(x0, y1);
  const Vec2 d = field.at(x1, y1);
  const Vec2 top = a * (1.0 - fx) + b * fx;
  const Vec2 bottom = c * (1.0 - fx) + d * fx;
  return top * (1.0 - fy) + bottom * fy;
}

std::string flow_frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.flo", index);
  return buf;
}

std::vector<std::filesystem::path> list_flow_frames(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) throw Error(ErrorCode::kIo, "not a directory: " + directory.string());
  std::map<long, fs::path> ordered;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() != 16 || name.rfind("frame_", 0) != 0 || entry.path().extension() != ".flo") continue;
    const std::string digits = name.substr(6, 6);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    ordered.emplace(std::stol(digits), entry.path());
  }
  std::vector<fs::path> out;
  out.reserve(ordered.size());
  for (auto& [index, path] : ordered) out.push_back(std::move(path));
  return out;
}

}  // namespace crowdflux
