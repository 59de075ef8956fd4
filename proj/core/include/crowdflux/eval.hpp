// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crowdflux/advect.hpp"
#include "crowdflux/pgm.hpp"
#include "crowdflux/pipeline.hpp"

namespace crowdflux {

struct RocPoint {
  double threshold = 0.0;  // a sample is flagged when score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct EvalReport {
  std::vector<RocPoint> roc;  // starts at (0,0) with threshold +inf, ends at (1,1)
  double auc = 0.0;
  double eer = 0.0;
  double rd = 0.0;                // true-positive rate at the equal-error point
  double eer_threshold = 0.0;     // first swept threshold at or past the equal-error point
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// ROC over every distinct score (ties move together), trapezoid AUC, and
/// the equal-error point by linear interpolation between the two ROC points
/// that straddle FPR = 1 - TPR. Throws kEmptyTruth without positives or
/// without negatives.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const char> positive);

/// Truth masks keyed by frame index (gt_%06d.pgm).
std::map<int, GrayImage> load_truth_masks(const std::filesystem::path& directory);

/// Per-frame score: the largest record error among clips covering the
/// frame. Frames no clip covers are absent.
std::map<int, double> frame_scores(std::span<const DetectionRecord> records, int clip_length);

/// Frame-level ROC: a frame is positive when its truth mask has any pixel;
/// frames that no clip covers are left out.
EvalReport frame_level_eval(std::span<const DetectionRecord> records, int clip_length,
                            const std::map<int, GrayImage>& truth);

/// Pixel-level ROC. At threshold t the detected region of a frame is the
/// union of its cells scoring >= t. A truly abnormal frame counts as found
/// only when that region covers more than `coverage` of its truth pixels; a
/// normal frame is a false alarm when the region is nonempty.
EvalReport pixel_level_eval(std::span<const DetectionRecord> records, int clip_length, const GridSpec& grid,
                            const std::map<int, GrayImage>& truth, double coverage = 0.4);

/// Per-frame scores used by pixel_level_eval: the largest threshold that
/// still satisfies the coverage rule for abnormal frames, the largest cell
/// error for normal ones.
std::map<int, double> pixel_scores(std::span<const DetectionRecord> records, int clip_length, const GridSpec& grid,
                                   const std::map<int, GrayImage>& truth, double coverage = 0.4);

/// threshold,fpr,tpr rows plus a "# auc=... eer=... rd=..." trailer.
void write_eval_csv(std::ostream& out, const EvalReport& report);
EvalReport read_eval_csv(std::istream& in);

/// Summary block: one key: value line per statistic.
std::string format_summary(const EvalReport& report);

/// One row per named report: name,auc,eer,rd,positives,negatives.
void write_report_table(std::ostream& out, std::span<const std::pair<std::string, EvalReport>> reports);

}  // namespace crowdflux
