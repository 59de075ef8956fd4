// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace crowdflux {

/// Force magnitudes of one clip: row t is frame clip_start + t, column j is
/// cell j.
struct ForceFlowMatrix {
  int clip_start = 0;
  Eigen::MatrixXd values;

  int frames() const noexcept { return static_cast<int>(values.rows()); }
  int cells() const noexcept { return static_cast<int>(values.cols()); }
};

/// One cell's force time series over a clip.
struct VisualWord {
  Eigen::VectorXd values;
  int cell_index = 0;
  int clip_start = 0;

  int length() const noexcept { return static_cast<int>(values.size()); }
};

/// Streaming windowing of per-frame force magnitudes into clips of T frames,
/// starting every `stride` frames (stride == T gives non-overlapping
/// clips). Incomplete trailing windows are never emitted.
class ForceFlowBuilder {
 public:
  ForceFlowBuilder(int clip_length, int cells, int stride = 0, int first_frame = 0);

  /// Feeds the next frame; returns the windows it completes (zero or one).
  std::vector<ForceFlowMatrix> push(std::span<const double> magnitudes);

  int clip_length() const noexcept { return clip_length_; }
  int stride() const noexcept { return stride_; }

 private:
  int clip_length_;
  int cells_;
  int stride_;
  int first_frame_;
  int frames_seen_ = 0;
  int next_start_ = 0;  // relative to first_frame_
  std::deque<std::vector<double>> recent_;
};

std::vector<ForceFlowMatrix> build_force_flow(std::span<const std::vector<double>> per_frame, int clip_length,
                                              int stride = 0, int first_frame = 0);

/// Word j is column j. With `normalize`, nonzero words are scaled to unit L2
/// norm.
std::vector<VisualWord> extract_words(const ForceFlowMatrix& matrix, bool normalize = false);

/// Inverse of extract_words (without normalization): columns ordered by
/// cell_index.
ForceFlowMatrix assemble_matrix(std::span<const VisualWord> words);

/// CSV with header "clip_start,cell,v0,...,v{T-1}".
void write_words_csv(std::ostream& out, std::span<const VisualWord> words);
std::vector<VisualWord> read_words_csv(std::istream& in);

}  // namespace crowdflux
