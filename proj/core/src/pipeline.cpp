// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "crowdflux/advect.hpp"
#include "crowdflux/error.hpp"
#include "crowdflux/features.hpp"
#include "crowdflux/force.hpp"
#include "crowdflux/parallel.hpp"

namespace crowdflux {
namespace {

constexpr int kChunkFrames = 64;

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Sources

DirectoryFlowSource::DirectoryFlowSource(const std::filesystem::path& directory, FloReadOptions options)
    : paths_(list_flow_frames(directory)), options_(options) {
  if (paths_.empty()) throw Error(ErrorCode::kIo, "no frame_*.flo files in " + directory.string());
  const FlowField first = read_flo_file(paths_.front(), options_);
  width_ = first.width;
  height_ = first.height;
}

FlowField DirectoryFlowSource::frame(int index) const {
  if (index < 0 || index >= frame_count()) throw Error(ErrorCode::kIndexOutOfRange, "flow frame out of range");
  FlowField f = read_flo_file(paths_[static_cast<std::size_t>(index)], options_);
  if (f.width != width_ || f.height != height_) {
    throw Error(ErrorCode::kDimensionMismatch, paths_[static_cast<std::size_t>(index)].string() +
                                                   " differs in size from the first frame");
  }
  return f;
}

ScenarioFlowSource::ScenarioFlowSource(std::shared_ptr<const Scenario> scenario) : scenario_(std::move(scenario)) {
  if (!scenario_ || scenario_->frame_count() < 2) throw Error(ErrorCode::kInvalidConfig, "scenario too short");
}

FlowField ScenarioFlowSource::frame(int index) const {
  if (index < 0 || index >= frame_count()) throw Error(ErrorCode::kIndexOutOfRange, "flow frame out of range");
  return rasterize_flow(*scenario_, index);
}

FrameRange::FrameRange(const FlowSource& base, int first, int count) : base_(base), first_(first), count_(count) {
  if (first < 0 || count < 0 || first + count > base.frame_count()) {
    throw Error(ErrorCode::kIndexOutOfRange, "frame range [" + std::to_string(first) + ", " +
                                                 std::to_string(first + count) + ") exceeds " +
                                                 std::to_string(base.frame_count()) + " frames");
  }
}

FlowField FrameRange::frame(int index) const {
  if (index < 0 || index >= count_) throw Error(ErrorCode::kIndexOutOfRange, "flow frame out of range");
  return base_.frame(first_ + index);
}

// ---------------------------------------------------------------------------
// Features

std::vector<std::vector<double>> compute_frame_forces(const FlowSource& source, const GridSpec& grid,
                                                      const PipelineConfig& config, int first, int count,
                                                      int workers) {
  const InteractionParams params = config.interaction(grid);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    const int f = first + static_cast<int>(i);
    const FlowField flow = source.frame(f);
    const auto particles = advect_frame(flow, grid, config.top_pixels, f);
    out[i] = frame_forces(particles, params);
  });
  return out;
}

static std::pair<int, int> resolve_range(const FlowSource& source, int first, int count) {
  if (count < 0) count = source.frame_count() - first;
  if (first < 0 || count < 0 || first + count > source.frame_count()) {
    throw Error(ErrorCode::kIndexOutOfRange, "frame range [" + std::to_string(first) + ", " +
                                                 std::to_string(first + count) + ") exceeds " +
                                                 std::to_string(source.frame_count()) + " frames");
  }
  return {first, count};
}

std::vector<VisualWord> collect_words(const FlowSource& source, const GridSpec& grid, const PipelineConfig& config,
                                      int first, int count, int workers) {
  std::tie(first, count) = resolve_range(source, first, count);
  ForceFlowBuilder builder(config.clip, grid.cell_count(), config.effective_stride(), first);
  std::vector<VisualWord> words;
  for (int at = first; at < first + count; at += kChunkFrames) {
    const int n = std::min(kChunkFrames, first + count - at);
    for (const auto& forces : compute_frame_forces(source, grid, config, at, n, workers)) {
      for (const auto& m : builder.push(forces)) {
        auto clip_words = extract_words(m, config.normalize);
        words.insert(words.end(), std::make_move_iterator(clip_words.begin()),
                     std::make_move_iterator(clip_words.end()));
      }
    }
  }
  return words;
}

Model run_train(const FlowSource& source, const PipelineConfig& config, int first, int count,
                TrainSummary* summary) {
  config.validate();
  std::tie(first, count) = resolve_range(source, first, count);
  if (count < config.clip) {
    throw Error(ErrorCode::kInsufficientWords, std::to_string(count) +
                                                   " frames cannot fill one clip of T = " +
                                                   std::to_string(config.clip));
  }
  Model model;
  model.config = config;
  model.grid = config.grid_for(source.width(), source.height());
  const auto words = collect_words(source, model.grid, config, first, count, worker_count(config.threads));
  TrainResult trained = train_group(words, config.train_params());
  model.group = std::move(trained.group);
  model.uncovered = trained.uncovered;
  if (summary) {
    summary->words = words.size();
    summary->uncovered = trained.uncovered;
    summary->coverage_failure = trained.coverage_failure;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Detection

DetectionResult run_detect(const FlowSource& source, const Model& model, const PipelineConfig& config, int first,
                           int count) {
  config.validate();
  std::tie(first, count) = resolve_range(source, first, count);
  check_model(model, config, source.width(), source.height());
  const GridSpec grid = config.grid_for(source.width(), source.height());
  const int workers = worker_count(config.threads);

  DetectorOptions options;
  options.update = config.update;
  options.pool_capacity = static_cast<std::size_t>(config.pool);
  options.global_min_words = config.effective_global_min_words();
  options.delta = config.delta;
  options.passes = config.passes;
  options.train = config.train_params();
  options.workers = workers;

  GroupDictionary group = model.group;
  group.lambda = config.lambda;
  Detector detector(std::move(group), options);

  DetectionResult result;
  ForceFlowBuilder builder(config.clip, grid.cell_count(), config.effective_stride(), first);
  for (int at = first; at < first + count; at += kChunkFrames) {
    const int n = std::min(kChunkFrames, first + count - at);
    for (const auto& forces : compute_frame_forces(source, grid, config, at, n, workers)) {
      for (const auto& m : builder.push(forces)) {
        const auto words = extract_words(m, config.normalize);
        const auto labels = detector.process(words);
        for (std::size_t i = 0; i < words.size(); ++i) {
          DetectionRecord r;
          r.clip_start = m.clip_start;
          r.cell = words[i].cell_index;
          r.error = labels[i].error;
          r.label = labels[i].label;
          r.dictionary_id = labels[i].dictionary_id;
          result.records.push_back(r);
        }
      }
    }
  }
  detector.finish();
  result.stats = detector.stats();
  result.verdicts = frame_verdicts(result.records, config.clip, first, count);
  return result;
}

std::vector<FrameVerdict> frame_verdicts(std::span<const DetectionRecord> records, int clip_length, int first,
                                         int count) {
  std::vector<FrameVerdict> out(static_cast<std::size_t>(std::max(count, 0)));
  for (int f = 0; f < count; ++f) out[static_cast<std::size_t>(f)].frame = first + f;
  for (const auto& r : records) {
    const int lo = std::max(r.clip_start, first);
    const int hi = std::min(r.clip_start + clip_length, first + count);
    for (int f = lo; f < hi; ++f) {
      auto& v = out[static_cast<std::size_t>(f - first)];
      v.covered = true;
      if (r.label == Label::kAbnormal) v.abnormal_cells.push_back(r.cell);
    }
  }
  for (auto& v : out) {
    std::sort(v.abnormal_cells.begin(), v.abnormal_cells.end());
    v.abnormal_cells.erase(std::unique(v.abnormal_cells.begin(), v.abnormal_cells.end()), v.abnormal_cells.end());
    v.abnormal = !v.abnormal_cells.empty();
  }
  return out;
}

GrayImage detection_mask(const FrameVerdict& verdict, const GridSpec& grid) {
  GrayImage mask;
  mask.width = grid.frame_width;
  mask.height = grid.frame_height;
  mask.pixels.assign(static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height), 0);
  for (const int cell : verdict.abnormal_cells) {
    const CellRect r = grid.cell_rect(cell);
    for (int y = r.y0; y < r.y1; ++y) {
      std::fill_n(mask.pixels.begin() + static_cast<std::ptrdiff_t>(y) * mask.width + r.x0, r.width(), 255);
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Records

void write_records_csv(std::ostream& out, std::span<const DetectionRecord> records) {
  out << "clip_start,cell,error,label,dict_id\n";
  for (const auto& r : records) {
    out << r.clip_start << ',' << r.cell << ',' << shortest(r.error) << ','
        << (r.label == Label::kNormal ? "normal" : "abnormal") << ',' << r.dictionary_id << '\n';
  }
}

std::vector<DetectionRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("clip_start,cell,error,label", 0) != 0) {
    throw Error(ErrorCode::kParse, "records CSV must start with clip_start,cell,error,label,dict_id");
  }
  std::vector<DetectionRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() < 4) throw Error(ErrorCode::kParse, "records row " + std::to_string(line_no) + " is short");
    DetectionRecord r;
    try {
      r.clip_start = std::stoi(fields[0]);
      r.cell = std::stoi(fields[1]);
      r.error = std::stod(fields[2]);
      if (fields.size() > 4 && !fields[4].empty()) r.dictionary_id = std::stoi(fields[4]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, "bad records row " + std::to_string(line_no));
    }
    if (fields[3] == "normal") {
      r.label = Label::kNormal;
    } else if (fields[3] == "abnormal") {
      r.label = Label::kAbnormal;
    } else {
      throw Error(ErrorCode::kParse, "bad label '" + fields[3] + "' on records row " + std::to_string(line_no));
    }
    out.push_back(r);
  }
  return out;
}

void save_records(const std::filesystem::path& path, std::span<const DetectionRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_records_csv(out, records);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<DetectionRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_records_csv(in);
}

void write_detection_masks(const std::filesystem::path& directory, std::span<const FrameVerdict> verdicts,
                           const GridSpec& grid) {
  std::filesystem::create_directories(directory);
  for (const auto& v : verdicts) write_pgm(directory / detection_mask_name(v.frame), detection_mask(v, grid));
}

}  // namespace crowdflux
