// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <memory>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "crowdflux/detector.hpp"
#include "crowdflux/error.hpp"
#include "crowdflux/pipeline.hpp"
#include "crowdflux/rng.hpp"
#include "crowdflux/synth.hpp"

namespace cf = crowdflux;

namespace {

std::shared_ptr<const cf::Scenario> scene(cf::Preset preset = cf::Preset::kPanic) {
  cf::ScenarioConfig s;
  s.preset = preset;
  s.width = 160;
  s.height = 120;
  s.frames = 161;
  s.agents = 12;
  s.t_anomaly = 120;
  s.seed = 5;
  return std::make_shared<const cf::Scenario>(cf::simulate_scenario(s));
}

cf::PipelineConfig small_config() {
  cf::PipelineConfig c;
  c.grid = 8;
  c.clip = 10;
  c.atoms = 4;
  c.top_pixels = 1;
  c.radius = 3.0;
  c.pool = 20;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(Pipeline, SourcesAgree) {
  const auto s = scene();
  const cf::ScenarioFlowSource source(s);
  EXPECT_EQ(source.frame_count(), 160);
  EXPECT_EQ(source.frame(17), cf::rasterize_flow(*s, 17));
  const cf::FrameRange range(source, 40, 20);
  EXPECT_EQ(range.frame_count(), 20);
  EXPECT_EQ(range.frame(3), source.frame(43));

  const auto dir = std::filesystem::temp_directory_path() / "crowdflux_pipeline_sources";
  std::filesystem::remove_all(dir);
  cf::write_scenario(*s, dir);
  const cf::DirectoryFlowSource disk(dir);
  EXPECT_EQ(disk.frame_count(), 160);
  EXPECT_EQ(disk.width(), 160);
  EXPECT_EQ(disk.frame(99), source.frame(99));
  EXPECT_TRUE(std::filesystem::exists(dir / "gt" / cf::truth_mask_name(130)));
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, ForcesIndependentOfWorkers) {
  const cf::ScenarioFlowSource source(scene());
  const auto c = small_config();
  const auto grid = c.grid_for(160, 120);
  const auto one = cf::compute_frame_forces(source, grid, c, 10, 30, 1);
  const auto many = cf::compute_frame_forces(source, grid, c, 10, 30, 4);
  EXPECT_EQ(one, many);
  ASSERT_EQ(one.size(), 30u);
  EXPECT_EQ(one.front().size(), 64u);
  const auto words = cf::collect_words(source, grid, c, 0, 95, 3);
  EXPECT_EQ(words.size(), 64u * 9u);
}

TEST(Pipeline, TrainAndDetectInvariants) {
  const cf::ScenarioFlowSource source(scene());
  const auto c = small_config();
  cf::TrainSummary summary;
  const cf::Model model = cf::run_train(source, c, 0, 100, &summary);
  EXPECT_EQ(summary.words, 64u * 10u);
  EXPECT_GE(model.group.size(), 1);
  EXPECT_EQ(model.clip(), 10);

  const auto r = cf::run_detect(source, model, c, 100, 55);
  // 5 full clips; the last 5 frames are not covered.
  EXPECT_EQ(r.stats.clips, 5);
  ASSERT_EQ(r.records.size(), 5u * 64u);
  std::set<std::pair<int, int>> keys;
  for (const auto& rec : r.records) {
    keys.emplace(rec.clip_start, rec.cell);
    EXPECT_EQ(rec.label == cf::Label::kAbnormal, rec.dictionary_id < 0);
  }
  EXPECT_EQ(keys.size(), r.records.size());
  ASSERT_EQ(r.verdicts.size(), 55u);
  for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
    const auto& v = r.verdicts[i];
    EXPECT_EQ(v.frame, 100 + static_cast<int>(i));
    EXPECT_EQ(v.covered, i < 50);
    EXPECT_EQ(v.abnormal, !v.abnormal_cells.empty());
    EXPECT_TRUE(std::is_sorted(v.abnormal_cells.begin(), v.abnormal_cells.end()));
  }
}

TEST(Pipeline, DeterministicEndToEnd) {
  const cf::ScenarioFlowSource source(scene());
  auto c = small_config();
  auto run = [&](int threads) {
    c.threads = threads;
    const auto model = cf::run_train(source, c, 0, 80);
    auto fixed = model;
    fixed.config.threads = 1;  // the stored config records the worker count
    std::ostringstream m;
    cf::write_model(m, fixed);
    const auto r = cf::run_detect(source, model, c, 80, 80);
    std::ostringstream recs;
    cf::write_records_csv(recs, r.records);
    return m.str() + recs.str();
  };
  const std::string a = run(1);
  EXPECT_EQ(a, run(1));
  EXPECT_EQ(a, run(3));
}

TEST(Pipeline, FrozenModelNeverChanges) {
  const cf::ScenarioFlowSource source(scene());
  auto c = small_config();
  const auto model = cf::run_train(source, c, 0, 80);
  c.update = false;
  c.pool = 1;
  const auto r = cf::run_detect(source, model, c, 80, 80);
  EXPECT_EQ(r.stats.local_updates, 0);
  EXPECT_EQ(r.stats.global_updates, 0);

  cf::DetectorOptions opts;
  opts.update = false;
  opts.pool_capacity = 1;
  cf::Detector det(model.group, opts);
  const auto words = cf::collect_words(source, model.grid, c, 80, 80, 1);
  for (std::size_t i = 0; i < words.size(); i += 64) {
    det.process(std::span(words).subspan(i, 64));
  }
  det.finish();
  EXPECT_EQ(det.version(), 0u);
  EXPECT_EQ(det.snapshot()->dictionaries[0].atoms(), model.group.dictionaries[0].atoms());
}

TEST(Pipeline, UpdatesFireAndMatchAcrossWorkers) {
  const cf::ScenarioFlowSource source(scene());
  auto c = small_config();
  c.lambda = 0.01;
  const auto model = cf::run_train(source, c, 0, 80);
  c.pool = 5;
  auto detect = [&](int threads) {
    c.threads = threads;
    return cf::run_detect(source, model, c, 80, 80);
  };
  const auto one = detect(1);
  const auto four = detect(4);
  EXPECT_GT(one.stats.local_updates + one.stats.global_updates, 0);
  ASSERT_EQ(one.records.size(), four.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    EXPECT_EQ(one.records[i].error, four.records[i].error);
    EXPECT_EQ(one.records[i].label, four.records[i].label);
  }
}

TEST(Pipeline, ModelMismatchIsReported) {
  const cf::ScenarioFlowSource source(scene());
  auto c = small_config();
  const auto model = cf::run_train(source, c, 0, 40);
  c.clip = 8;
  EXPECT_THROW(cf::run_detect(source, model, c, 40, 40), cf::Error);
  EXPECT_THROW(cf::run_train(source, small_config(), 0, 5), cf::Error);
}

TEST(Pipeline, VerdictsTakeUnionOfOverlappingClips) {
  std::vector<cf::DetectionRecord> recs = {
      {0, 3, 0.5, cf::Label::kAbnormal, -1}, {0, 1, 0.0, cf::Label::kNormal, 0},
      {5, 1, 0.5, cf::Label::kAbnormal, -1}, {5, 3, 0.0, cf::Label::kNormal, 0}};
  const auto v = cf::frame_verdicts(recs, 10, 0, 16);
  ASSERT_EQ(v.size(), 16u);
  EXPECT_EQ(v[2].abnormal_cells, std::vector<int>{3});
  EXPECT_EQ(v[7].abnormal_cells, (std::vector<int>{1, 3}));
  EXPECT_EQ(v[12].abnormal_cells, std::vector<int>{1});
  EXPECT_FALSE(v[15].covered);

  const auto grid = cf::make_grid(20, 20, 2);
  const auto mask = cf::detection_mask(v[7], grid);
  EXPECT_EQ(mask.count_nonzero(), 200u);
  EXPECT_EQ(mask.pixels[15], 255);       // cell 1 is the top right
  EXPECT_EQ(mask.pixels[15 * 20], 0);    // cell 2 is clear
}

TEST(Pipeline, RecordsCsvRoundTrip) {
  const std::vector<cf::DetectionRecord> recs = {{0, 1, 0.1234567890123, cf::Label::kNormal, 2},
                                                 {30, 7, 3.5, cf::Label::kAbnormal, -1}};
  std::stringstream io;
  cf::write_records_csv(io, recs);
  const auto back = cf::read_records_csv(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].error, recs[0].error);
  EXPECT_EQ(back[1].label, cf::Label::kAbnormal);
  EXPECT_EQ(back[0].dictionary_id, 2);
  EXPECT_EQ(back[1].clip_start, 30);
}
