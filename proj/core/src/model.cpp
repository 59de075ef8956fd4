// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

constexpr const char* kMagic = "crowdflux-model";

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expect) {
    std::string line;
    if (!std::getline(in_, line)) throw Error(ErrorCode::kParse, std::string("model ends before '") + expect + "'");
    ++line_no_;
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag != expect) {
      throw Error(ErrorCode::kParse, "model line " + std::to_string(line_no_) + ": expected '" + expect + "'");
    }
    return row;
  }

  std::string raw() {
    std::string line;
    if (!std::getline(in_, line)) throw Error(ErrorCode::kParse, "model truncated");
    ++line_no_;
    return line;
  }

  int line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

double parse_double(const std::string& token, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kParse, "model line " + std::to_string(line) + ": bad number '" + token + "'");
  }
  return v;
}

template <typename T>
T read_field(std::istringstream& row, int line) {
  std::string token;
  if (!(row >> token)) throw Error(ErrorCode::kParse, "model line " + std::to_string(line) + ": missing value");
  if constexpr (std::is_floating_point_v<T>) {
    return parse_double(token, line);
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorCode::kParse, "model line " + std::to_string(line) + ": bad integer '" + token + "'");
    }
    return v;
  }
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const auto& g = model.group;
  const int T = g.word_length();
  const int d = g.atom_count();
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "lambda " << shortest(g.lambda) << '\n';
  out << "clip " << T << '\n';
  out << "atoms " << d << '\n';
  out << "dictionaries " << g.size() << '\n';
  out << "grid " << model.grid.rows << ' ' << model.grid.cols << '\n';
  out << "frame " << model.grid.frame_width << ' ' << model.grid.frame_height << '\n';
  out << "seed " << model.config.seed << '\n';
  out << "uncovered " << model.uncovered << '\n';
  const std::string cfg = format_config(model.config);
  out << "config " << std::count(cfg.begin(), cfg.end(), '\n') << '\n' << cfg;
  for (const auto& dict : g.dictionaries) {
    out << "dictionary " << dict.id() << '\n';
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < d; ++j) {
        if (j) out << ' ';
        out << shortest(dict.atoms()(t, j));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Model read_model(std::istream& in) {
  LineReader r(in);
  Model model;
  {
    auto row = r.next(kMagic);
    const int version = read_field<int>(row, r.line_no());
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported model version " + std::to_string(version));
    }
  }
  {
    auto row = r.next("lambda");
    model.group.lambda = read_field<double>(row, r.line_no());
  }
  int T = 0, d = 0, s = 0;
  {
    auto row = r.next("clip");
    T = read_field<int>(row, r.line_no());
  }
  {
    auto row = r.next("atoms");
    d = read_field<int>(row, r.line_no());
  }
  {
    auto row = r.next("dictionaries");
    s = read_field<int>(row, r.line_no());
  }
  int rows = 0, cols = 0, fw = 0, fh = 0;
  {
    auto row = r.next("grid");
    rows = read_field<int>(row, r.line_no());
    cols = read_field<int>(row, r.line_no());
  }
  {
    auto row = r.next("frame");
    fw = read_field<int>(row, r.line_no());
    fh = read_field<int>(row, r.line_no());
  }
  {
    auto row = r.next("seed");
    read_field<std::uint64_t>(row, r.line_no());
  }
  {
    auto row = r.next("uncovered");
    model.uncovered = read_field<std::size_t>(row, r.line_no());
  }
  {
    auto row = r.next("config");
    const int n = read_field<int>(row, r.line_no());
    std::string text;
    for (int i = 0; i < n; ++i) text += r.raw() + '\n';
    apply_config_text(model.config, text);
  }
  if (T < 2 || d < 1 || s < 0 || rows < 1 || cols < 1) throw Error(ErrorCode::kParse, "model header out of range");

  for (int i = 0; i < s; ++i) {
    auto row = r.next("dictionary");
    const int id = read_field<int>(row, r.line_no());
    if (id != i) throw Error(ErrorCode::kParse, "dictionaries must be stored in id order");
    Eigen::MatrixXd atoms(T, d);
    for (int t = 0; t < T; ++t) {
      std::istringstream values(r.raw());
      for (int j = 0; j < d; ++j) atoms(t, j) = read_field<double>(values, r.line_no());
    }
    model.group.dictionaries.emplace_back(id, std::move(atoms));
  }
  r.next("end");

  model.grid = model.config.grid_for(fw, fh);
  if (model.grid.rows != rows || model.grid.cols != cols) {
    throw Error(ErrorCode::kParse, "model grid line disagrees with its stored config");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write model " + path.string());
  write_model(out, model);
  if (!out) throw Error(ErrorCode::kIo, "failed writing model " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model " + path.string());
  return read_model(in);
}

void check_model(const Model& model, const PipelineConfig& config, int frame_width, int frame_height) {
  if (model.clip() != config.clip) {
    throw Error(ErrorCode::kModelMismatch, "model clip length T = " + std::to_string(model.clip()) +
                                               " but config has clip = " + std::to_string(config.clip));
  }
  const GridSpec grid = config.grid_for(frame_width, frame_height);
  if (grid.rows != model.grid.rows || grid.cols != model.grid.cols) {
    throw Error(ErrorCode::kModelMismatch, "model grid " + std::to_string(model.grid.rows) + "x" +
                                               std::to_string(model.grid.cols) + " but input yields " +
                                               std::to_string(grid.rows) + "x" + std::to_string(grid.cols));
  }
}

}  // namespace crowdflux
