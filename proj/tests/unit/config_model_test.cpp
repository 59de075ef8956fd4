// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "crowdflux/config.hpp"
#include "crowdflux/error.hpp"
#include "crowdflux/model.hpp"
#include "crowdflux/rng.hpp"

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

cf::Model random_model(int dicts, int t, int d, std::uint64_t seed) {
  cf::Rng rng(seed);
  cf::Model m;
  m.config.clip = t;
  m.config.atoms = d;
  m.config.grid = 4;
  m.grid = cf::make_grid(80, 60, 4);
  m.group.lambda = 0.0731;
  m.uncovered = 7;
  for (int k = 0; k < dicts; ++k) {
    Eigen::MatrixXd a(t, d);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    m.group.dictionaries.emplace_back(k, a);
  }
  return m;
}

}  // namespace

TEST(Config, KeysRoundTrip) {
  cf::PipelineConfig c;
  c.grid = 12;
  c.lambda = 0.123456789012345;
  c.update = false;
  c.seed = 1234567890123ULL;
  c.tau_min = 0.25;
  cf::PipelineConfig back;
  cf::apply_config_text(back, cf::format_config(c));
  EXPECT_EQ(back, c);
  for (const auto& key : cf::config_keys()) {
    cf::PipelineConfig copy;
    cf::set_config_value(copy, key, cf::get_config_value(c, key));
    EXPECT_EQ(cf::get_config_value(copy, key), cf::get_config_value(c, key)) << key;
  }
}

TEST(Config, ProfileAppliesFirst) {
  cf::PipelineConfig umn;
  cf::apply_profile(umn, "umn");
  cf::PipelineConfig c;
  cf::apply_config_text(c, "grid=7\n# comment\nprofile=umn\n");
  EXPECT_EQ(c.grid, 7);
  EXPECT_EQ(c.lambda, umn.lambda);
  for (const auto& name : cf::profile_names()) {
    cf::PipelineConfig p;
    cf::apply_profile(p, name);
    EXPECT_NO_THROW(p.validate()) << name;
  }
  EXPECT_THROW(cf::apply_profile(c, "nope"), cf::Error);
}

TEST(Config, RejectsBadValues) {
  cf::PipelineConfig c;
  EXPECT_EQ(code_of([&] { cf::set_config_value(c, "grid", "x"); }), cf::ErrorCode::kParse);
  EXPECT_EQ(code_of([&] { cf::set_config_value(c, "unknown", "1"); }), cf::ErrorCode::kParse);
  c.atoms = 20;  // more than clip / 2
  EXPECT_THROW(c.validate(), cf::Error);
}

TEST(Config, DerivedSettings) {
  cf::PipelineConfig c;
  c.grid = 10;
  const auto g = c.grid_for(320, 240);
  EXPECT_EQ(g.cell_count(), 100);
  const auto p = c.interaction(g);
  EXPECT_DOUBLE_EQ(p.tau0, 90.0);
  EXPECT_DOUBLE_EQ(p.tau_max, 270.0);
  EXPECT_DOUBLE_EQ(p.radius, 12.0);  // half of the 24-pixel cell side
  c.block_pixels = 16;
  EXPECT_EQ(c.grid_for(320, 240).cols, 20);
  EXPECT_EQ(c.effective_stride(), c.clip);
  EXPECT_EQ(c.effective_global_min_words(), static_cast<std::size_t>(c.pool));
  EXPECT_EQ(c.train_params().lambda, c.lambda);
}

TEST(Model, TextRoundTripIsExact) {
  const auto m = random_model(3, 30, 10, 5);
  std::stringstream io;
  cf::write_model(io, m);
  const auto back = cf::read_model(io);
  EXPECT_EQ(back.group.lambda, m.group.lambda);
  EXPECT_EQ(back.grid, m.grid);
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.uncovered, 7u);
  ASSERT_EQ(back.group.size(), 3);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back.group.dictionaries[k].atoms(), m.group.dictionaries[k].atoms());
    EXPECT_EQ(back.group.dictionaries[k].id(), k);
  }
  std::stringstream again;
  cf::write_model(again, back);
  std::stringstream first;
  cf::write_model(first, m);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Model, RejectsDamage) {
  const auto m = random_model(1, 30, 5, 6);
  std::stringstream io;
  cf::write_model(io, m);
  const std::string text = io.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(cf::read_model(cut), cf::Error);
  std::istringstream wrong("not-a-model 1\n");
  EXPECT_THROW(cf::read_model(wrong), cf::Error);
}

TEST(Model, MismatchIsDetected) {
  const auto m = random_model(1, 30, 5, 7);
  cf::PipelineConfig c = m.config;
  EXPECT_NO_THROW(cf::check_model(m, c, 80, 60));
  c.clip = 20;
  EXPECT_EQ(code_of([&] { cf::check_model(m, c, 80, 60); }), cf::ErrorCode::kModelMismatch);
  c = m.config;
  c.grid = 5;
  EXPECT_EQ(code_of([&] { cf::check_model(m, c, 80, 60); }), cf::ErrorCode::kModelMismatch);
  // With a fixed block size the frame size decides the grid.
  auto blocks = m;
  blocks.config.block_pixels = 10;
  blocks.grid = blocks.config.grid_for(80, 60);
  EXPECT_NO_THROW(cf::check_model(blocks, blocks.config, 80, 60));
  EXPECT_EQ(code_of([&] { cf::check_model(blocks, blocks.config, 100, 60); }), cf::ErrorCode::kModelMismatch);
}
