// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_value(std::string_view token) {
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kParse, "bad number '" + std::string(token) + "' in eval CSV");
  }
  return v;
}

// Cell errors of one frame, maxed over the clips that cover it.
std::map<int, std::vector<double>> frame_cell_errors(std::span<const DetectionRecord> records, int clip_length,
                                                     int cells) {
  std::map<int, std::vector<double>> out;
  const double floor = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.cell < 0 || r.cell >= cells) {
      throw Error(ErrorCode::kIndexOutOfRange, "record cell " + std::to_string(r.cell) + " outside the grid");
    }
    for (int f = r.clip_start; f < r.clip_start + clip_length; ++f) {
      auto [it, fresh] = out.try_emplace(f);
      if (fresh) it->second.assign(static_cast<std::size_t>(cells), floor);
      double& slot = it->second[static_cast<std::size_t>(r.cell)];
      slot = std::max(slot, r.error);
    }
  }
  return out;
}

EvalReport evaluate_frames(const std::map<int, double>& scores, const std::map<int, GrayImage>& truth) {
  std::vector<double> s;
  std::vector<char> positive;
  for (const auto& [frame, mask] : truth) {
    const auto it = scores.find(frame);
    if (it == scores.end()) continue;
    s.push_back(it->second);
    positive.push_back(!mask.empty_mask());
  }
  return evaluate_scores(s, positive);
}

}  // namespace

EvalReport evaluate_scores(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  EvalReport report;
  for (const char p : positive) (p ? report.positives : report.negatives)++;
  if (report.positives == 0) throw Error(ErrorCode::kEmptyTruth, "no positive samples; EER is undefined");
  if (report.negatives == 0) throw Error(ErrorCode::kEmptyTruth, "no negative samples; EER is undefined");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double P = static_cast<double>(report.positives);
  const double N = static_cast<double>(report.negatives);
  report.roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) (positive[order[i]] ? tp : fp)++;
    report.roc.push_back({threshold, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
  }

  for (std::size_t i = 1; i < report.roc.size(); ++i) {
    const auto& a = report.roc[i - 1];
    const auto& b = report.roc[i];
    report.auc += 0.5 * (b.fpr - a.fpr) * (a.tpr + b.tpr);
  }

  // g = FPR - (1 - TPR) rises from -1 at (0,0) to +1 at (1,1).
  for (std::size_t i = 1; i < report.roc.size(); ++i) {
    const auto& a = report.roc[i - 1];
    const auto& b = report.roc[i];
    const double ga = a.fpr - (1.0 - a.tpr);
    const double gb = b.fpr - (1.0 - b.tpr);
    if (gb < 0.0) continue;
    const double t = gb == ga ? 0.0 : -ga / (gb - ga);
    report.eer = a.fpr + t * (b.fpr - a.fpr);
    report.rd = a.tpr + t * (b.tpr - a.tpr);
    report.eer_threshold = b.threshold;
    break;
  }
  return report;
}

std::map<int, GrayImage> load_truth_masks(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) throw Error(ErrorCode::kIo, "not a directory: " + directory.string());
  std::map<int, GrayImage> out;
  for (const auto& entry : fs::directory_iterator(directory)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() != 13 || name.rfind("gt_", 0) != 0 || name.substr(9) != ".pgm") {
      continue;
    }
    int frame = 0;
    const auto [ptr, ec] = std::from_chars(name.data() + 3, name.data() + 9, frame);
    if (ec != std::errc() || ptr != name.data() + 9) continue;
    out.emplace(frame, read_pgm(entry.path()));
  }
  if (out.empty()) throw Error(ErrorCode::kIo, "no gt_*.pgm masks in " + directory.string());
  return out;
}

std::map<int, double> frame_scores(std::span<const DetectionRecord> records, int clip_length) {
  std::map<int, double> out;
  for (const auto& r : records) {
    for (int f = r.clip_start; f < r.clip_start + clip_length; ++f) {
      auto [it, fresh] = out.try_emplace(f, r.error);
      if (!fresh) it->second = std::max(it->second, r.error);
    }
  }
  return out;
}

EvalReport frame_level_eval(std::span<const DetectionRecord> records, int clip_length,
                            const std::map<int, GrayImage>& truth) {
  return evaluate_frames(frame_scores(records, clip_length), truth);
}

std::map<int, double> pixel_scores(std::span<const DetectionRecord> records, int clip_length, const GridSpec& grid,
                                   const std::map<int, GrayImage>& truth, double coverage) {
  std::map<int, double> out;
  const auto cell_errors = frame_cell_errors(records, clip_length, grid.cell_count());
  for (const auto& [frame, mask] : truth) {
    const auto it = cell_errors.find(frame);
    if (it == cell_errors.end()) continue;
    const std::vector<double>& errors = it->second;
    if (mask.width != grid.frame_width || mask.height != grid.frame_height) {
      throw Error(ErrorCode::kDimensionMismatch, "truth mask " + std::to_string(frame) + " does not match the grid");
    }
    const std::size_t total = mask.count_nonzero();
    if (total == 0) {
      out[frame] = *std::max_element(errors.begin(), errors.end());
      continue;
    }
    std::vector<std::size_t> hits(errors.size(), 0);
    for (int c = 0; c < grid.cell_count(); ++c) {
      const CellRect r = grid.cell_rect(c);
      for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
          hits[static_cast<std::size_t>(c)] += mask.pixels[static_cast<std::size_t>(y) * mask.width + x] != 0;
        }
      }
    }
    std::vector<std::size_t> order(errors.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
    // Lower the threshold one tie group at a time until the flagged cells
    // cover enough of the truth.
    std::size_t covered = 0;
    double critical = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < order.size();) {
      const double level = errors[order[i]];
      for (; i < order.size() && errors[order[i]] == level; ++i) covered += hits[order[i]];
      if (static_cast<double>(covered) > coverage * static_cast<double>(total)) {
        critical = level;
        break;
      }
    }
    out[frame] = critical;
  }
  return out;
}

EvalReport pixel_level_eval(std::span<const DetectionRecord> records, int clip_length, const GridSpec& grid,
                            const std::map<int, GrayImage>& truth, double coverage) {
  if (!(coverage >= 0.0 && coverage < 1.0)) throw Error(ErrorCode::kInvalidConfig, "coverage must lie in [0, 1)");
  return evaluate_frames(pixel_scores(records, clip_length, grid, truth, coverage), truth);
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : report.roc) out << shortest(p.threshold) << ',' << shortest(p.fpr) << ',' << shortest(p.tpr) << '\n';
  out << "# auc=" << shortest(report.auc) << " eer=" << shortest(report.eer) << " rd=" << shortest(report.rd)
      << " threshold=" << shortest(report.eer_threshold) << " positives=" << report.positives
      << " negatives=" << report.negatives << '\n';
}

EvalReport read_eval_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("threshold,fpr,tpr", 0) != 0) {
    throw Error(ErrorCode::kParse, "eval CSV must start with threshold,fpr,tpr");
  }
  EvalReport report;
  bool trailer = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string item;
      while (fields >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "auc") report.auc = parse_value(value);
        else if (key == "eer") report.eer = parse_value(value);
        else if (key == "rd") report.rd = parse_value(value);
        else if (key == "threshold") report.eer_threshold = parse_value(value);
        else if (key == "positives") report.positives = static_cast<std::size_t>(parse_value(value));
        else if (key == "negatives") report.negatives = static_cast<std::size_t>(parse_value(value));
      }
      trailer = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw Error(ErrorCode::kParse, "eval CSV row needs three fields");
    }
    report.roc.push_back({parse_value(a), parse_value(b), parse_value(c)});
  }
  if (!trailer) throw Error(ErrorCode::kParse, "eval CSV lacks the '# auc=' trailer");
  return report;
}

std::string format_summary(const EvalReport& report) {
  std::ostringstream out;
  out << "auc: " << shortest(report.auc) << '\n'
      << "eer: " << shortest(report.eer) << '\n'
      << "rd: " << shortest(report.rd) << '\n'
      << "eer_threshold: " << shortest(report.eer_threshold) << '\n'
      << "positives: " << report.positives << '\n'
      << "negatives: " << report.negatives << '\n';
  return out.str();
}

void write_report_table(std::ostream& out, std::span<const std::pair<std::string, EvalReport>> reports) {
  out << "name,auc,eer,rd,positives,negatives\n";
  for (const auto& [name, r] : reports) {
    out << name << ',' << shortest(r.auc) << ',' << shortest(r.eer) << ',' << shortest(r.rd) << ',' << r.positives
        << ',' << r.negatives << '\n';
  }
}

}  // namespace crowdflux
