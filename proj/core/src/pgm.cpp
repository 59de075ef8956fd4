// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c = in.get();
  for (;;) {
    while (c != EOF && std::isspace(c)) c = in.get();
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    break;
  }
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  return token;
}

}  // namespace

std::size_t GrayImage::count_nonzero() const noexcept {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p != 0; }));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  if (next_token(in) != "P5") throw Error(ErrorCode::kParse, path.string() + " is not a binary PGM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "bad PGM header in " + path.string());
  }
  if (width < 1 || height < 1 || maxval != 255) {
    throw Error(ErrorCode::kParse, "unsupported PGM geometry in " + path.string());
  }
  GrayImage image(width, height);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw Error(ErrorCode::kTruncated, "PGM payload too short in " + path.string());
  }
  return image;
}

std::string truth_mask_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gt_%06d.pgm", frame);
  return buf;
}

std::string detection_mask_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "det_%06d.pgm", frame);
  return buf;
}

}  // namespace crowdflux
