// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "crowdflux/error.hpp"

namespace crowdflux {

ForceFlowBuilder::ForceFlowBuilder(int clip_length, int cells, int stride, int first_frame)
    : clip_length_(clip_length), cells_(cells), stride_(stride > 0 ? stride : clip_length), first_frame_(first_frame) {
  if (clip_length < 2) throw Error(ErrorCode::kInvalidConfig, "clip length T must be at least 2");
  if (cells < 1) throw Error(ErrorCode::kInvalidConfig, "force flow needs at least one cell");
}

std::vector<ForceFlowMatrix> ForceFlowBuilder::push(std::span<const double> magnitudes) {
  if (static_cast<int>(magnitudes.size()) != cells_) {
    throw Error(ErrorCode::kDimensionMismatch, "frame has " + std::to_string(magnitudes.size()) +
                                                   " cells, expected " + std::to_string(cells_));
  }
  recent_.emplace_back(magnitudes.begin(), magnitudes.end());
  if (static_cast<int>(recent_.size()) > clip_length_) recent_.pop_front();
  ++frames_seen_;

  std::vector<ForceFlowMatrix> done;
  if (frames_seen_ == next_start_ + clip_length_) {
    ForceFlowMatrix m;
    m.clip_start = first_frame_ + next_start_;
    m.values.resize(clip_length_, cells_);
    for (int t = 0; t < clip_length_; ++t) {
      const auto& row = recent_[static_cast<std::size_t>(t)];
      for (int j = 0; j < cells_; ++j) m.values(t, j) = row[static_cast<std::size_t>(j)];
    }
    done.push_back(std::move(m));
    next_start_ += stride_;
  }
  return done;
}

std::vector<ForceFlowMatrix> build_force_flow(std::span<const std::vector<double>> per_frame, int clip_length,
                                              int stride, int first_frame) {
  if (per_frame.empty()) return {};
  ForceFlowBuilder builder(clip_length, static_cast<int>(per_frame.front().size()), stride, first_frame);
  std::vector<ForceFlowMatrix> out;
  for (const auto& frame : per_frame) {
    for (auto& m : builder.push(frame)) out.push_back(std::move(m));
  }
  return out;
}

std::vector<VisualWord> extract_words(const ForceFlowMatrix& matrix, bool normalize) {
  std::vector<VisualWord> words;
  words.reserve(static_cast<std::size_t>(matrix.cells()));
  for (int j = 0; j < matrix.cells(); ++j) {
    VisualWord w;
    w.values = matrix.values.col(j);
    w.cell_index = j;
    w.clip_start = matrix.clip_start;
    if (normalize) {
      const double n = w.values.norm();
      if (n > 0.0) w.values /= n;
    }
    words.push_back(std::move(w));
  }
  return words;
}

ForceFlowMatrix assemble_matrix(std::span<const VisualWord> words) {
  ForceFlowMatrix m;
  if (words.empty()) return m;
  const int T = words.front().length();
  int cells = 0;
  for (const auto& w : words) {
    if (w.length() != T) throw Error(ErrorCode::kDimensionMismatch, "words of different lengths");
    cells = std::max(cells, w.cell_index + 1);
  }
  m.clip_start = words.front().clip_start;
  m.values = Eigen::MatrixXd::Zero(T, cells);
  for (const auto& w : words) m.values.col(w.cell_index) = w.values;
  return m;
}

void write_words_csv(std::ostream& out, std::span<const VisualWord> words) {
  const int T = words.empty() ? 0 : words.front().length();
  out << "clip_start,cell";
  for (int t = 0; t < T; ++t) out << ",v" << t;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& w : words) {
    out << w.clip_start << ',' << w.cell_index;
    for (int t = 0; t < w.length(); ++t) out << ',' << w.values[t];
    out << '\n';
  }
  out.precision(old_precision);
}

std::vector<VisualWord> read_words_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("clip_start,cell", 0) != 0) {
    throw Error(ErrorCode::kParse, "word CSV must start with a clip_start,cell header");
  }
  std::vector<VisualWord> words;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<double> values;
    VisualWord w;
    try {
      std::getline(row, field, ',');
      w.clip_start = std::stoi(field);
      std::getline(row, field, ',');
      w.cell_index = std::stoi(field);
      while (std::getline(row, field, ',')) values.push_back(std::stod(field));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, "bad word CSV row " + std::to_string(line_no));
    }
    w.values = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    words.push_back(std::move(w));
  }
  return words;
}

}  // namespace crowdflux
