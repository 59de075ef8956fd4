// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "crowdflux/error.hpp"
#include "crowdflux/eval.hpp"
#include "crowdflux/rng.hpp"
#include "oracles.hpp"

namespace cf = crowdflux;

namespace {

cf::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const cf::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return cf::ErrorCode::kIo;
}

void expect_monotone(const cf::EvalReport& r) {
  ASSERT_GE(r.roc.size(), 2u);
  EXPECT_EQ(r.roc.front().fpr, 0.0);
  EXPECT_EQ(r.roc.front().tpr, 0.0);
  EXPECT_EQ(r.roc.back().fpr, 1.0);
  EXPECT_EQ(r.roc.back().tpr, 1.0);
  for (std::size_t i = 1; i < r.roc.size(); ++i) {
    EXPECT_GE(r.roc[i].fpr, r.roc[i - 1].fpr);
    EXPECT_GE(r.roc[i].tpr, r.roc[i - 1].tpr);
    EXPECT_LT(r.roc[i].threshold, r.roc[i - 1].threshold);
  }
  EXPECT_GE(r.auc, 0.0);
  EXPECT_LE(r.auc, 1.0);
}

}  // namespace

TEST(Eval, PerfectSeparation) {
  const std::vector<double> s = {0.9, 0.8, 0.7, 0.2, 0.1};
  const std::vector<char> p = {1, 1, 1, 0, 0};
  const auto r = cf::evaluate_scores(s, p);
  expect_monotone(r);
  EXPECT_DOUBLE_EQ(r.auc, 1.0);
  EXPECT_DOUBLE_EQ(r.eer, 0.0);
  EXPECT_DOUBLE_EQ(r.rd, 1.0);
  EXPECT_EQ(r.positives, 3u);
  EXPECT_EQ(r.negatives, 2u);
}

TEST(Eval, ConstantScoresAreChance) {
  const std::vector<double> s(10, 0.5);
  const std::vector<char> p = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto r = cf::evaluate_scores(s, p);
  expect_monotone(r);
  EXPECT_EQ(r.roc.size(), 2u);
  EXPECT_DOUBLE_EQ(r.auc, 0.5);
  EXPECT_DOUBLE_EQ(r.eer, 0.5);
}

TEST(Eval, EqualErrorByInterpolation) {
  // ROC (0,0) -> (0,0.5) -> (0.5,0.5) -> (0.5,1) -> (1,1); the diagonal
  // FPR = 1 - TPR crosses the segment from (0,0.5) to (0.5,0.5) at 0.5.
  const std::vector<double> s = {4, 3, 2, 1};
  const std::vector<char> p = {1, 0, 1, 0};
  const auto r = cf::evaluate_scores(s, p);
  EXPECT_DOUBLE_EQ(r.auc, 0.75);
  EXPECT_DOUBLE_EQ(r.eer, 0.5);
  EXPECT_DOUBLE_EQ(r.rd, 0.5);
  EXPECT_EQ(r.eer_threshold, 3.0);
}

TEST(Eval, MatchesDenseSweep) {
  cf::Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> s;
    std::vector<char> p;
    for (int i = 0; i < 300; ++i) {
      const bool pos = rng.uniform() < 0.3;
      p.push_back(pos);
      s.push_back(std::round((rng.normal() + (pos ? 1.2 : 0.0)) * 20) / 20);  // rounding creates ties
    }
    const auto r = cf::evaluate_scores(s, p);
    const auto o = cf::oracle::dense_sweep(s, p, 20000);
    expect_monotone(r);
    EXPECT_NEAR(r.auc, o.auc, 1e-12);
    EXPECT_NEAR(r.eer, o.eer, 0.01);
  }
}

TEST(Eval, AucPermutationInvariant) {
  cf::Rng rng(32);
  std::vector<double> s;
  std::vector<char> p;
  for (int i = 0; i < 100; ++i) {
    p.push_back(rng.uniform() < 0.5);
    s.push_back(rng.uniform());
  }
  const auto a = cf::evaluate_scores(s, p);
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = (i * 37) % idx.size();
  std::vector<double> s2;
  std::vector<char> p2;
  for (auto i : idx) {
    s2.push_back(s[i]);
    p2.push_back(p[i]);
  }
  const auto b = cf::evaluate_scores(s2, p2);
  EXPECT_DOUBLE_EQ(a.auc, b.auc);
  EXPECT_DOUBLE_EQ(a.eer, b.eer);
}

TEST(Eval, EmptyTruthIsAnError) {
  const std::vector<double> s = {1, 2};
  const std::vector<char> none = {0, 0}, all = {1, 1};
  EXPECT_EQ(code_of([&] { cf::evaluate_scores(s, none); }), cf::ErrorCode::kEmptyTruth);
  EXPECT_EQ(code_of([&] { cf::evaluate_scores(s, all); }), cf::ErrorCode::kEmptyTruth);
}

TEST(Eval, FrameScoresAndCoverage) {
  const std::vector<cf::DetectionRecord> recs = {{0, 0, 0.1}, {0, 1, 0.4}, {10, 0, 0.2}, {10, 1, 0.05}};
  const auto scores = cf::frame_scores(recs, 10);
  ASSERT_EQ(scores.size(), 20u);
  EXPECT_DOUBLE_EQ(scores.at(3), 0.4);
  EXPECT_DOUBLE_EQ(scores.at(15), 0.2);

  std::map<int, cf::GrayImage> truth;
  for (int f = 0; f < 25; ++f) truth.emplace(f, cf::GrayImage(4, 4, f >= 10 ? 255 : 0));
  // Frames 20..24 are not covered by any clip and are left out.
  const auto r = cf::frame_level_eval(recs, 10, truth);
  EXPECT_EQ(r.positives + r.negatives, 20u);
  EXPECT_DOUBLE_EQ(r.auc, 0.0);
}

TEST(Eval, PixelRuleNeedsMoreThanCoverage) {
  // One row of 100 one-pixel-wide cells; the abnormal frame is all truth.
  const cf::GridSpec grid{1, 100, 1, 2, 100, 2};
  auto score_with = [&](int lit_columns) {
    std::vector<cf::DetectionRecord> recs;
    for (int cell = 0; cell < 100; ++cell) {
      recs.push_back({0, cell, cell < lit_columns ? 1.0 : 0.0});
      recs.push_back({1, cell, 0.5});
    }
    std::map<int, cf::GrayImage> truth;
    truth.emplace(0, cf::GrayImage(100, 2, 255));
    truth.emplace(1, cf::GrayImage(100, 2, 0));
    const auto scores = cf::pixel_scores(recs, 1, grid, truth, 0.4);
    EXPECT_DOUBLE_EQ(scores.at(1), 0.5);
    const auto report = cf::pixel_level_eval(recs, 1, grid, truth, 0.4);
    return std::make_pair(scores.at(0), report.auc);
  };
  EXPECT_EQ(score_with(39), std::make_pair(0.0, 0.0));
  EXPECT_EQ(score_with(40), std::make_pair(0.0, 0.0));  // exactly 40% is not more than 40%
  EXPECT_EQ(score_with(41), std::make_pair(1.0, 1.0));
}

TEST(Eval, PixelScoresAgreeWithRecount) {
  cf::Rng rng(33);
  const auto grid = cf::make_grid(40, 30, 5);
  std::vector<cf::DetectionRecord> recs;
  for (int clip = 0; clip < 4; ++clip) {
    for (int cell = 0; cell < grid.cell_count(); ++cell) recs.push_back({clip * 5, cell, rng.uniform()});
  }
  std::map<int, cf::GrayImage> truth;
  for (int f = 0; f < 20; ++f) {
    cf::GrayImage m(40, 30);
    if (f >= 8) {
      const int cx = static_cast<int>(rng.below(30)) + 5, cy = static_cast<int>(rng.below(20)) + 5;
      for (int y = cy - 4; y <= cy + 4; ++y) {
        for (int x = cx - 4; x <= cx + 4; ++x) m.pixels[static_cast<std::size_t>(y) * 40 + x] = 255;
      }
    }
    truth.emplace(f, m);
  }
  const auto report = cf::pixel_level_eval(recs, 5, grid, truth, 0.4);
  expect_monotone(report);
  for (const auto& pt : report.roc) {
    if (std::isinf(pt.threshold)) continue;
    std::size_t tp = 0, fp = 0, pos = 0, neg = 0;
    for (const auto& [f, mask] : truth) {
      if (mask.empty_mask()) {
        ++neg;
        fp += cf::oracle::any_flagged(recs, 5, f, pt.threshold);
      } else {
        ++pos;
        tp += cf::oracle::pixel_hit(recs, 5, grid, f, mask, pt.threshold, 0.4);
      }
    }
    EXPECT_DOUBLE_EQ(pt.tpr, static_cast<double>(tp) / pos) << pt.threshold;
    EXPECT_DOUBLE_EQ(pt.fpr, static_cast<double>(fp) / neg) << pt.threshold;
  }
}

TEST(Eval, CsvRoundTripAndReport) {
  const std::vector<double> s = {0.9, 0.4, 0.6, 0.1};
  const std::vector<char> p = {1, 0, 1, 0};
  const auto r = cf::evaluate_scores(s, p);
  std::stringstream io;
  cf::write_eval_csv(io, r);
  const auto back = cf::read_eval_csv(io);
  ASSERT_EQ(back.roc.size(), r.roc.size());
  EXPECT_DOUBLE_EQ(back.auc, r.auc);
  EXPECT_DOUBLE_EQ(back.eer, r.eer);
  EXPECT_DOUBLE_EQ(back.rd, r.rd);
  EXPECT_NE(cf::format_summary(r).find("auc"), std::string::npos);
  std::ostringstream table;
  const std::vector<std::pair<std::string, cf::EvalReport>> rows = {{"a", r}};
  cf::write_report_table(table, rows);
  EXPECT_EQ(table.str().rfind("name,auc,eer,rd", 0), 0u);
}
