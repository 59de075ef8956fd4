// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/advect.hpp"

#include <algorithm>
#include <ostream>

#include "crowdflux/error.hpp"

namespace crowdflux {

CellRect GridSpec::cell_rect(int cell) const {
  if (cell < 0 || cell >= cell_count()) throw Error(ErrorCode::kIndexOutOfRange, "cell index out of range");
  const int r = row_of(cell);
  const int c = col_of(cell);
  CellRect rect;
  rect.x0 = c * cell_width;
  rect.y0 = r * cell_height;
  rect.x1 = (c == cols - 1) ? frame_width : rect.x0 + cell_width;
  rect.y1 = (r == rows - 1) ? frame_height : rect.y0 + cell_height;
  return rect;
}

int GridSpec::cell_at(int x, int y) const noexcept {
  const int c = std::min(x / cell_width, cols - 1);
  const int r = std::min(y / cell_height, rows - 1);
  return cell_index(r, c);
}

GridSpec make_grid(int frame_width, int frame_height, int b) {
  if (b < 1) throw Error(ErrorCode::kGridTooFine, "grid needs at least one cell per side");
  if (b > frame_width || b > frame_height) {
    throw Error(ErrorCode::kGridTooFine, std::to_string(b) + " cells per side exceed a " +
                                             std::to_string(frame_width) + "x" + std::to_string(frame_height) +
                                             " frame");
  }
  return GridSpec{b, b, frame_width / b, frame_height / b, frame_width, frame_height};
}

GridSpec make_grid_from_block(int frame_width, int frame_height, int block_pixels) {
  if (block_pixels < 1 || block_pixels > frame_width || block_pixels > frame_height) {
    throw Error(ErrorCode::kGridTooFine, "block size must be between 1 and the frame size");
  }
  const int cols = frame_width / block_pixels;
  const int rows = frame_height / block_pixels;
  return GridSpec{rows, cols, block_pixels, block_pixels, frame_width, frame_height};
}

CharacteristicParticle select_characteristic(const GridSpec& grid, int cell, const FlowField& flow, int s,
                                             int frame_index) {
  if (s < 1) throw Error(ErrorCode::kInvalidConfig, "top pixel count must be at least 1");
  const CellRect rect = grid.cell_rect(cell);

  struct Candidate {
    double speed2;
    std::size_t index;
  };
  std::vector<Candidate> moving;
  moving.reserve(static_cast<std::size_t>(rect.width()) * static_cast<std::size_t>(rect.height()));
  for (int y = rect.y0; y < rect.y1; ++y) {
    for (int x = rect.x0; x < rect.x1; ++x) {
      const std::size_t i = flow.index(x, y);
      const double speed2 = squared_norm(Vec2{flow.u[i], flow.v[i]});
      if (speed2 > 0.0) moving.push_back({speed2, i});
    }
  }

  CharacteristicParticle p;
  p.cell_index = cell;
  p.frame_index = frame_index;
  if (moving.empty()) {
    p.position = {static_cast<double>(rect.x0 + (rect.width() - 1) / 2),
                  static_cast<double>(rect.y0 + (rect.height() - 1) / 2)};
    return p;
  }

  const auto faster = [](const Candidate& a, const Candidate& b) {
    return a.speed2 != b.speed2 ? a.speed2 > b.speed2 : a.index < b.index;
  };
  const std::size_t take = std::min(moving.size(), static_cast<std::size_t>(s));
  std::partial_sort(moving.begin(), moving.begin() + static_cast<std::ptrdiff_t>(take), moving.end(), faster);

  // k-means with a single cluster is the centroid.
  Vec2 centroid;
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t i = moving[k].index;
    centroid += Vec2{static_cast<double>(i % static_cast<std::size_t>(flow.width)),
                     static_cast<double>(i / static_cast<std::size_t>(flow.width))};
  }
  centroid *= 1.0 / static_cast<double>(take);

  p.position = centroid;
  p.velocity = sample_flow(flow, centroid.x, centroid.y);
  p.speed = norm(p.velocity);
  return p;
}

std::vector<CharacteristicParticle> advect_frame(const FlowField& flow, const GridSpec& grid, int s, int frame_index) {
  if (flow.width != grid.frame_width || flow.height != grid.frame_height) {
    throw Error(ErrorCode::kDimensionMismatch, "flow is " + std::to_string(flow.width) + "x" +
                                                   std::to_string(flow.height) + ", grid expects " +
                                                   std::to_string(grid.frame_width) + "x" +
                                                   std::to_string(grid.frame_height));
  }
  std::vector<CharacteristicParticle> out;
  out.reserve(static_cast<std::size_t>(grid.cell_count()));
  for (int cell = 0; cell < grid.cell_count(); ++cell) {
    out.push_back(select_characteristic(grid, cell, flow, s, frame_index));
  }
  return out;
}

void write_particles_csv(std::ostream& out, std::span<const CharacteristicParticle> particles, bool header) {
  if (header) out << "frame,cell,px,py,vx,vy\n";
  for (const auto& p : particles) {
    out << p.frame_index << ',' << p.cell_index << ',' << p.position.x << ',' << p.position.y << ','
        << p.velocity.x << ',' << p.velocity.y << '\n';
  }
}

}  // namespace crowdflux
