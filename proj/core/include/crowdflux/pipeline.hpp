// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "crowdflux/codebook.hpp"
#include "crowdflux/config.hpp"
#include "crowdflux/detector.hpp"
#include "crowdflux/flow_io.hpp"
#include "crowdflux/model.hpp"
#include "crowdflux/pgm.hpp"
#include "crowdflux/synth.hpp"

namespace crowdflux {

/// Random-access, frame-ordered flow. Frame i is the flow from image i to
/// image i+1.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  virtual int frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  /// Must be safe to call from several threads at once.
  virtual FlowField frame(int index) const = 0;
};

/// frame_%06d.flo files of one directory, in index order.
class DirectoryFlowSource final : public FlowSource {
 public:
  explicit DirectoryFlowSource(const std::filesystem::path& directory, FloReadOptions options = {});
  int frame_count() const override { return static_cast<int>(paths_.size()); }
  int width() const override { return width_; }
  int height() const override { return height_; }
  FlowField frame(int index) const override;

 private:
  std::vector<std::filesystem::path> paths_;
  FloReadOptions options_;
  int width_ = 0;
  int height_ = 0;
};

/// Rasterizes a simulated scenario on demand.
class ScenarioFlowSource final : public FlowSource {
 public:
  explicit ScenarioFlowSource(std::shared_ptr<const Scenario> scenario);
  int frame_count() const override { return scenario_->frame_count() - 1; }
  int width() const override { return scenario_->config.width; }
  int height() const override { return scenario_->config.height; }
  FlowField frame(int index) const override;

 private:
  std::shared_ptr<const Scenario> scenario_;
};

/// Frames [first, first + count) of another source, renumbered from 0.
class FrameRange final : public FlowSource {
 public:
  FrameRange(const FlowSource& base, int first, int count);
  int frame_count() const override { return count_; }
  int width() const override { return base_.width(); }
  int height() const override { return base_.height(); }
  FlowField frame(int index) const override;

 private:
  const FlowSource& base_;
  int first_;
  int count_;
};

/// Net force magnitude per cell for frames [first, first + count), computed
/// in parallel over frames.
std::vector<std::vector<double>> compute_frame_forces(const FlowSource& source, const GridSpec& grid,
                                                      const PipelineConfig& config, int first, int count,
                                                      int workers);

/// All visual words of frames [first, first + count) (clips per config.clip
/// and stride).
std::vector<VisualWord> collect_words(const FlowSource& source, const GridSpec& grid, const PipelineConfig& config,
                                      int first, int count, int workers);

struct TrainSummary {
  std::size_t words = 0;
  std::size_t uncovered = 0;
  bool coverage_failure = false;
};

/// advect, force, features, train_group over frames [first, first + count)
/// (count < 0 means to the end). Throws kInsufficientWords when the range
/// holds fewer than T frames.
Model run_train(const FlowSource& source, const PipelineConfig& config, int first = 0, int count = -1,
                TrainSummary* summary = nullptr);

struct DetectionRecord {
  int clip_start = 0;
  int cell = 0;
  double error = 0.0;
  Label label = Label::kNormal;
  int dictionary_id = -1;  // -1 when abnormal
};

struct FrameVerdict {
  int frame = 0;
  bool covered = false;  // false for trailing frames no complete clip reaches
  bool abnormal = false;
  std::vector<int> abnormal_cells;  // ascending
};

struct DetectionResult {
  std::vector<DetectionRecord> records;  // clip order, then cell order
  std::vector<FrameVerdict> verdicts;    // one per input frame
  DetectorStats stats;
};

/// Streams the clips of frames [first, first + count) through a Detector
/// seeded with the model's group. Clip starts and verdict frames keep the
/// source's numbering. Throws kModelMismatch when T or the grid disagree
/// with the config.
DetectionResult run_detect(const FlowSource& source, const Model& model, const PipelineConfig& config,
                           int first = 0, int count = -1);

/// Clip verdicts broadcast to member frames of [first, first + count);
/// frames covered by several clips (stride < T) take the union of their
/// abnormal cells.
std::vector<FrameVerdict> frame_verdicts(std::span<const DetectionRecord> records, int clip_length, int first,
                                         int count);

/// Abnormal cells painted 255 over their pixel rectangles.
GrayImage detection_mask(const FrameVerdict& verdict, const GridSpec& grid);

void write_records_csv(std::ostream& out, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_records_csv(std::istream& in);
void save_records(const std::filesystem::path& path, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> load_records(const std::filesystem::path& path);

/// Writes det_%06d.pgm for every verdict into `directory`.
void write_detection_masks(const std::filesystem::path& directory, std::span<const FrameVerdict> verdicts,
                           const GridSpec& grid);

}  // namespace crowdflux
