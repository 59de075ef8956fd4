// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "crowdflux/flow_io.hpp"
#include "crowdflux/geometry.hpp"

namespace crowdflux {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool contains(double x, double y) const noexcept { return x >= x0 && x <= x1 - 1 && y >= y0 && y <= y1 - 1; }
};

/// Fixed partition of a frame into rows x cols cells. The last row and
/// column absorb the division remainder. Cells are numbered row-major.
struct GridSpec {
  int rows = 1;
  int cols = 1;
  int cell_width = 1;
  int cell_height = 1;
  int frame_width = 1;
  int frame_height = 1;

  int cell_count() const noexcept { return rows * cols; }
  int cell_index(int row, int col) const noexcept { return row * cols + col; }
  int row_of(int cell) const noexcept { return cell / cols; }
  int col_of(int cell) const noexcept { return cell % cols; }
  CellRect cell_rect(int cell) const;
  /// Cell that owns pixel (x, y).
  int cell_at(int x, int y) const noexcept;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// b x b cells of floor(width/b) x floor(height/b) pixels. Throws
/// kGridTooFine when b exceeds a frame dimension (or b < 1).
GridSpec make_grid(int frame_width, int frame_height, int b);

/// Alternative reading: square cells of `block_pixels` pixels; the cell count
/// per side follows from the frame size.
GridSpec make_grid_from_block(int frame_width, int frame_height, int block_pixels);

/// One representative point per cell and frame.
struct CharacteristicParticle {
  int cell_index = 0;
  Vec2 position;
  Vec2 velocity;
  int frame_index = 0;
  double speed = 0.0;  // norm(velocity)
};

/// Centroid of the `s` fastest pixels of the cell (ties by row-major pixel
/// index), with the bilinear flow at that centroid. A cell without moving
/// pixels yields a stationary particle at its central pixel.
CharacteristicParticle select_characteristic(const GridSpec& grid, int cell, const FlowField& flow, int s,
                                             int frame_index = 0);

/// One particle per cell, in cell order. Throws kDimensionMismatch when the
/// flow size differs from the grid's frame.
std::vector<CharacteristicParticle> advect_frame(const FlowField& flow, const GridSpec& grid, int s,
                                                 int frame_index = 0);

/// CSV debug dump with header "frame,cell,px,py,vx,vy".
void write_particles_csv(std::ostream& out, std::span<const CharacteristicParticle> particles, bool header = true);

}  // namespace crowdflux
