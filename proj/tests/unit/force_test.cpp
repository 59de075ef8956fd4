// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "crowdflux/advect.hpp"
#include "crowdflux/error.hpp"
#include "crowdflux/force.hpp"
#include "crowdflux/rng.hpp"
#include "crowdflux/synth.hpp"
#include "oracles.hpp"

namespace cf = crowdflux;

namespace {

cf::InteractionParams params() { return cf::InteractionParams::from_seconds(1.5, 3.0, 30.0, 6.0); }

// A pair that enters contact at time `tau` with relative velocity `v`.
struct Pair {
  cf::Vec2 xi, vi, xj, vj;
};

Pair colliding_pair(cf::Rng& rng, double tau, double radius) {
  const double speed = rng.uniform(0.3, 3.0);
  const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const cf::Vec2 v{speed * std::cos(heading), speed * std::sin(heading)};
  const double off = rng.uniform(-0.4, 0.4) * std::numbers::pi;
  const cf::Vec2 w = radius * cf::rotated(-1.0 / speed * v, off) - tau * v;
  const cf::Vec2 xi{rng.uniform(0, 300), rng.uniform(0, 200)};
  const cf::Vec2 vi{rng.uniform(-2, 2), rng.uniform(-2, 2)};
  return {xi, vi, xi + w, vi + v};
}

cf::CharacteristicParticle particle(cf::Vec2 x, cf::Vec2 v, int cell = 0) {
  cf::CharacteristicParticle p;
  p.cell_index = cell;
  p.position = x;
  p.velocity = v;
  p.speed = cf::norm(v);
  return p;
}

}  // namespace

TEST(Force, ParamsFromSecondsAndValidation) {
  const auto p = params();
  EXPECT_DOUBLE_EQ(p.tau0, 90.0);
  EXPECT_DOUBLE_EQ(p.tau_max, 270.0);
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.tau_max = 50.0;
  EXPECT_THROW(bad.validate(), cf::Error);
  bad = p;
  bad.tau_min = 0.0;
  EXPECT_THROW(bad.validate(), cf::Error);
}

TEST(Force, TimeToCollisionHeadOnByHand) {
  // Gap 10 closing at 2 per frame with contact at distance 2: (10 - 2) / 2.
  const auto tau = cf::time_to_collision(cf::Vec2{10, 0}, cf::Vec2{-2, 0}, 2.0);
  ASSERT_TRUE(tau);
  EXPECT_DOUBLE_EQ(*tau, 4.0);
}

TEST(Force, TimeToCollisionMissingCases) {
  EXPECT_FALSE(cf::time_to_collision(cf::Vec2{10, 0}, cf::Vec2{2, 0}, 2.0));   // diverging
  EXPECT_FALSE(cf::time_to_collision(cf::Vec2{10, 0}, cf::Vec2{0, 0}, 2.0));   // no relative motion
  EXPECT_FALSE(cf::time_to_collision(cf::Vec2{10, 5}, cf::Vec2{-1, 0}, 2.0));  // passes by
  const auto overlap = cf::time_to_collision(cf::Vec2{1, 0}, cf::Vec2{1, 0}, 2.0, 0.1);
  ASSERT_TRUE(overlap);
  EXPECT_DOUBLE_EQ(*overlap, 0.1);
}

TEST(Force, TimeToCollisionMatchesForwardSimulation) {
  cf::Rng rng(77);
  int colliding = 0;
  for (int i = 0; i < 500; ++i) {
    const cf::Vec2 w{rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const cf::Vec2 v{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    if (cf::norm(w) <= 3.0) continue;
    const auto sim = cf::oracle::simulate_collision(w, v, 3.0, 40.0);
    const auto tau = cf::time_to_collision(w, v, 3.0);
    if (tau && *tau > 40.0) continue;
    ASSERT_EQ(sim.has_value(), tau.has_value()) << i;
    if (sim) {
      ++colliding;
      EXPECT_NEAR(*sim, *tau, 1e-3);
    }
  }
  EXPECT_GT(colliding, 20);
}

TEST(Force, EnergyHandValueAndShape) {
  auto p = params();
  p.tau0 = 3.0;
  p.tau_max = 9.0;
  // 1.5 / 9 * e^-1
  EXPECT_NEAR(cf::interaction_energy(3.0, p), 0.0613132401952404, 1e-12);
  EXPECT_EQ(cf::interaction_energy(9.5, p), 0.0);
  EXPECT_THROW(cf::interaction_energy(0.05, p), cf::Error);
  double prev = cf::interaction_energy(p.tau_min, p);
  for (double t = p.tau_min + 0.01; t <= p.tau_max; t += 0.01) {
    const double e = cf::interaction_energy(t, p);
    EXPECT_LT(e, prev);
    EXPECT_GT(e, 0.0);
    prev = e;
  }
}

TEST(Force, EnergyDerivativeMatchesDifference) {
  const auto p = params();
  for (double t : {0.5, 1.0, 7.0, 42.0, 200.0}) {
    const double h = 1e-6 * t;
    const double fd = (cf::interaction_energy(t + h, p) - cf::interaction_energy(t - h, p)) / (2 * h);
    EXPECT_NEAR(cf::energy_derivative(t, p), fd, 1e-6 * std::fabs(fd));
  }
}

TEST(Force, GradientMatchesFiniteDifferences) {
  cf::Rng rng(5);
  const auto p = params();
  for (int i = 0; i < 300; ++i) {
    const auto pr = colliding_pair(rng, rng.uniform(0.5, 20.0), p.radius);
    const auto f = cf::repulsive_force(pr.xi, pr.vi, pr.xj, pr.vj, p);
    const cf::Vec2 g = cf::oracle::finite_difference_force(pr.xi, pr.vi, pr.xj, pr.vj, p);
    EXPECT_LT(std::hypot(f.fx - g.x, f.fy - g.y), 1e-5 * std::hypot(g.x, g.y)) << i;
  }
}

TEST(Force, ZeroCases) {
  const auto p = params();
  // Never collide.
  EXPECT_EQ(cf::repulsive_force({0, 0}, {0, 0}, {20, 0}, {1, 0}, p).magnitude(), 0.0);
  // Collide, but later than tau_max.
  EXPECT_EQ(cf::repulsive_force({0, 0}, {0, 0}, {1000, 0}, {-1, 0}, p).magnitude(), 0.0);
  // Grazing tangency: the relative path touches the contact circle.
  EXPECT_EQ(cf::repulsive_force({0, 0}, {0, 0}, {40, 6}, {-1, 0}, p).magnitude(), 0.0);
  // Already overlapping.
  EXPECT_EQ(cf::repulsive_force({0, 0}, {0, 0}, {3, 0}, {-1, 0}, p).magnitude(), 0.0);
  // Stationary pair.
  EXPECT_EQ(cf::repulsive_force({0, 0}, {0, 0}, {10, 0}, {0, 0}, p).magnitude(), 0.0);
  // Head-on inside the horizon does push.
  EXPECT_GT(cf::repulsive_force({0, 0}, {0, 0}, {40, 0}, {-1, 0}, p).magnitude(), 0.0);
}

TEST(Force, MagnitudeConsistentWithComponents) {
  const cf::ForceVector f{3e-4, -4e-4};
  EXPECT_NEAR(f.magnitude(), 5e-4, 5e-4 * 1e-12);
}

TEST(Force, PairIsAntisymmetric) {
  cf::Rng rng(9);
  const auto p = params();
  for (int i = 0; i < 100; ++i) {
    const auto pr = colliding_pair(rng, rng.uniform(0.5, 60.0), p.radius);
    const auto fi = cf::repulsive_force(pr.xi, pr.vi, pr.xj, pr.vj, p);
    const auto fj = cf::repulsive_force(pr.xj, pr.vj, pr.xi, pr.vi, p);
    EXPECT_NEAR(fi.fx, -fj.fx, 1e-12 * (1 + fi.magnitude()));
    EXPECT_NEAR(fi.fy, -fj.fy, 1e-12 * (1 + fi.magnitude()));
  }
}

TEST(Force, TranslationInvariance) {
  cf::Rng rng(10);
  const auto p = params();
  for (int i = 0; i < 100; ++i) {
    const auto pr = colliding_pair(rng, rng.uniform(0.5, 60.0), p.radius);
    const cf::Vec2 shift{rng.uniform(-100, 100), rng.uniform(-100, 100)};
    const auto a = cf::repulsive_force(pr.xi, pr.vi, pr.xj, pr.vj, p);
    const auto b = cf::repulsive_force(pr.xi + shift, pr.vi, pr.xj + shift, pr.vj, p);
    EXPECT_NEAR(a.fx, b.fx, 1e-9 * (1 + a.magnitude()));
    EXPECT_NEAR(a.fy, b.fy, 1e-9 * (1 + a.magnitude()));
  }
}

TEST(Force, RotationEquivariance) {
  cf::Rng rng(12);
  const auto p = params();
  for (int i = 0; i < 100; ++i) {
    const auto pr = colliding_pair(rng, rng.uniform(0.5, 60.0), p.radius);
    const double theta = rng.uniform(0, 2 * std::numbers::pi);
    const auto a = cf::repulsive_force(pr.xi, pr.vi, pr.xj, pr.vj, p);
    const auto b = cf::repulsive_force(cf::rotated(pr.xi, theta), cf::rotated(pr.vi, theta),
                                       cf::rotated(pr.xj, theta), cf::rotated(pr.vj, theta), p);
    const cf::Vec2 expect = cf::rotated(a.vec(), theta);
    const double scale = 1e-8 * (1 + a.magnitude());
    EXPECT_NEAR(b.fx, expect.x, scale);
    EXPECT_NEAR(b.fy, expect.y, scale);
    EXPECT_NEAR(b.magnitude(), a.magnitude(), scale);
  }
}

TEST(Force, ThreeParticlesSumPairwise) {
  const auto p = params();
  const std::vector<cf::CharacteristicParticle> ps = {
      particle({10, 10}, {1, 0}, 0), particle({40, 12}, {-1, 0}, 1), particle({25, 40}, {0, -1.5}, 2)};
  const auto forces = cf::frame_force_vectors(ps, p);
  const auto mags = cf::frame_forces(ps, p);
  ASSERT_EQ(forces.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    cf::Vec2 expect;
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      expect += cf::oracle::finite_difference_force(ps[i].position, ps[i].velocity, ps[j].position,
                                                    ps[j].velocity, p);
    }
    EXPECT_NEAR(forces[i].fx, expect.x, 1e-5 * (1e-12 + cf::norm(expect)));
    EXPECT_NEAR(forces[i].fy, expect.y, 1e-5 * (1e-12 + cf::norm(expect)));
    EXPECT_DOUBLE_EQ(mags[i], forces[i].magnitude());
  }
  EXPECT_GT(mags[0], 0.0);
}

TEST(Force, StationaryParticlesFeelNothing) {
  std::vector<cf::CharacteristicParticle> ps;
  for (int i = 0; i < 10; ++i) ps.push_back(particle({i * 7.0, i * 3.0}, {0, 0}, i));
  for (double m : cf::frame_forces(ps, params())) EXPECT_EQ(m, 0.0);
}

TEST(Force, PanicFrameStrongerThanNormalFrame) {
  cf::ScenarioConfig c;
  c.preset = cf::Preset::kPanic;
  c.width = 160;
  c.height = 120;
  c.frames = 201;
  c.agents = 20;
  c.t_anomaly = 120;
  const auto s = cf::simulate_scenario(c);
  const auto grid = cf::make_grid(160, 120, 10);
  const auto p = cf::InteractionParams::from_seconds(1.5, 3.0, 30.0, 6.0);
  auto mean_force = [&](int first, int last) {
    double total = 0;
    int n = 0;
    for (int f = first; f < last; ++f) {
      for (double m : cf::frame_forces(cf::advect_frame(cf::rasterize_flow(s, f), grid, 1), p)) {
        total += m;
        ++n;
      }
    }
    return total / n;
  };
  EXPECT_GT(mean_force(130, 190), mean_force(60, 120));
}

TEST(Force, CsvDump) {
  const std::vector<cf::CharacteristicParticle> ps = {particle({0, 0}, {1, 0}, 0), particle({30, 0}, {-1, 0}, 1)};
  const auto f = cf::frame_force_vectors(ps, params());
  std::ostringstream out;
  cf::write_forces_csv(out, ps, f);
  EXPECT_EQ(out.str().rfind("frame,cell,fx,fy,fmag\n", 0), 0u);
}
