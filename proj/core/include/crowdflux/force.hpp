// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crowdflux/advect.hpp"
#include "crowdflux/geometry.hpp"

namespace crowdflux {

/// Anticipatory interaction parameters. All times are in frames.
struct InteractionParams {
  double k = 1.5;          // energy scale
  double tau0 = 90.0;      // interaction range (frames)
  double tau_max = 270.0;  // pairs that would collide later than this do not interact
  double radius = 6.0;     // combined particle radius (pixels)
  double fps = 30.0;
  double tau_min = 0.1;    // clamp for the 1/tau^2 singularity
  double cutoff = 0.0;     // optional spatial neighbor radius in pixels, 0 = none

  /// tau0 given in seconds is converted with fps; tau_max <= 0 selects 3*tau0.
  static InteractionParams from_seconds(double k, double tau0_seconds, double fps, double radius,
                                        double tau_max_frames = 0.0, double tau_min = 0.1);

  /// Throws kInvalidConfig unless k > 0, tau0 > 0, tau_max > tau0, R > 0 and
  /// 0 < tau_min < tau_max.
  void validate() const;
};

struct ForceVector {
  double fx = 0.0;
  double fy = 0.0;

  double magnitude() const noexcept { return std::hypot(fx, fy); }
  Vec2 vec() const noexcept { return {fx, fy}; }
};

/// Smallest positive t with |w + v t| = R, where w = x_j - x_i and
/// v = v_j - v_i. Overlapping pairs (|w| <= R) and roots below tau_min return
/// tau_min; diverging, parallel, or missing pairs return nullopt.
std::optional<double> time_to_collision(Vec2 relative_position, Vec2 relative_velocity, double radius,
                                        double tau_min = 0.0);
std::optional<double> time_to_collision(const CharacteristicParticle& pi, const CharacteristicParticle& pj,
                                         double radius, double tau_min = 0.0);

/// E(tau) = k / tau^2 * exp(-tau / tau0); zero beyond tau_max. Throws
/// kDomainError for tau < tau_min.
double interaction_energy(double tau, const InteractionParams& params);

/// dE/dtau = -k exp(-tau/tau0) (2/tau^3 + 1/(tau^2 tau0)).
double energy_derivative(double tau, const InteractionParams& params);

/// Force on particle i: the negative gradient of E(tau) with respect to
/// x_i, via the chain rule through the time to collision.
///
/// Zero when the pair never collides, when tau > tau_max, at grazing
/// tangency, and for pairs already overlapping (no entry root, so no
/// gradient direction). A root below tau_min keeps its own direction but
/// takes dE/dtau at tau_min.
/// The force on j is exactly the negation, since tau depends on positions
/// only through x_j - x_i.
ForceVector repulsive_force(Vec2 xi, Vec2 vi, Vec2 xj, Vec2 vj, const InteractionParams& params);
ForceVector repulsive_force(const CharacteristicParticle& pi, const CharacteristicParticle& pj,
                            const InteractionParams& params);

/// Plain sum of the pairwise repulsive forces on p_i.
ForceVector net_force(const CharacteristicParticle& pi, std::span<const CharacteristicParticle> neighbors,
                      const InteractionParams& params);

/// Net force on every particle of one frame, each against all others.
std::vector<ForceVector> frame_force_vectors(std::span<const CharacteristicParticle> particles,
                                             const InteractionParams& params);

/// Euclidean magnitudes of frame_force_vectors, in particle order.
std::vector<double> frame_forces(std::span<const CharacteristicParticle> particles, const InteractionParams& params);

/// CSV debug dump with header "frame,cell,fx,fy,fmag".
void write_forces_csv(std::ostream& out, std::span<const CharacteristicParticle> particles,
                      std::span<const ForceVector> forces, bool header = true);

}  // namespace crowdflux
