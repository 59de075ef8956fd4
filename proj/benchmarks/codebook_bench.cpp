// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include <benchmark/benchmark.h>

#include "crowdflux/codebook.hpp"
#include "crowdflux/rng.hpp"

namespace cf = crowdflux;

namespace {

constexpr int kLength = 30;

std::vector<cf::VisualWord> words(int n, std::uint64_t seed) {
  cf::Rng rng(seed);
  std::vector<cf::VisualWord> out(static_cast<std::size_t>(n));
  for (auto& w : out) {
    w.values.resize(kLength);
    for (int t = 0; t < kLength; ++t) w.values[t] = rng.uniform(0, 1);
  }
  return out;
}

cf::Dictionary dictionary(int atoms) {
  cf::Rng rng(3);
  Eigen::MatrixXd m(kLength, atoms);
  for (int j = 0; j < atoms; ++j) {
    for (int t = 0; t < kLength; ++t) m(t, j) = rng.uniform(-1, 1);
  }
  return cf::Dictionary(0, m);
}

void BM_Code(benchmark::State& state) {
  const auto d = dictionary(static_cast<int>(state.range(0)));
  const auto w = words(1, 5);
  for (auto _ : state) benchmark::DoNotOptimize(d.error(w[0].values));
}
BENCHMARK(BM_Code)->Arg(5)->Arg(10)->Arg(15);

void BM_Classify(benchmark::State& state) {
  cf::GroupDictionary group;
  for (int i = 0; i < state.range(0); ++i) {
    auto d = dictionary(10);
    d.set_id(i);
    group.dictionaries.push_back(d);
  }
  group.lambda = 1e-9;  // nothing passes, so every dictionary is scanned
  const auto w = words(1, 5);
  for (auto _ : state) benchmark::DoNotOptimize(cf::classify_word(w[0], group));
}
BENCHMARK(BM_Classify)->Arg(1)->Arg(8)->Arg(32);

void BM_GradientUpdate(benchmark::State& state) {
  const auto d = dictionary(10);
  const auto pool = words(static_cast<int>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(cf::gradient_update(d, pool, 0.01, 1));
}
BENCHMARK(BM_GradientUpdate)->Arg(50)->Arg(200);

// Words drawn from three random 4-dimensional subspaces.
std::vector<cf::VisualWord> subspace_words(int n) {
  cf::Rng rng(11);
  std::vector<Eigen::MatrixXd> bases;
  for (int b = 0; b < 3; ++b) {
    Eigen::MatrixXd m(kLength, 4);
    for (int j = 0; j < 4; ++j) {
      for (int t = 0; t < kLength; ++t) m(t, j) = rng.uniform(-1, 1);
    }
    bases.push_back(m);
  }
  std::vector<cf::VisualWord> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd c(4);
    for (int j = 0; j < 4; ++j) c[j] = rng.uniform(-1, 1);
    out[static_cast<std::size_t>(i)].values = bases[static_cast<std::size_t>(i % 3)] * c;
  }
  return out;
}

void BM_TrainGroup(benchmark::State& state) {
  const auto train = subspace_words(400);
  cf::TrainParams params;
  params.lambda = 0.5;
  params.atoms = 5;
  params.max_dictionaries = 8;
  params.epochs = 3;
  for (auto _ : state) benchmark::DoNotOptimize(cf::train_group(train, params));
}
BENCHMARK(BM_TrainGroup)->Unit(benchmark::kMillisecond);

}  // namespace
