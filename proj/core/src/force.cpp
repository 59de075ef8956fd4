// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/force.hpp"

#include <cmath>
#include <ostream>

#include "crowdflux/error.hpp"

namespace crowdflux {
namespace {

constexpr double kTangencyEps = 1e-12;

enum class Contact { kNone, kOverlap, kAhead };

struct Root {
  Contact contact = Contact::kNone;
  double tau = 0.0;
};

// Entry root of a t^2 + 2 b t + c = 0 with a = |v|^2, b = w.v, c = |w|^2 - R^2.
Root collision_root(Vec2 w, Vec2 v, double radius) {
  const double c = squared_norm(w) - radius * radius;
  if (c <= 0.0) return {Contact::kOverlap, 0.0};
  const double a = squared_norm(v);
  const double b = dot(w, v);
  if (a == 0.0 || b >= 0.0) return {};
  const double disc = b * b - a * c;
  if (disc < 0.0) return {};
  // c / (-b + sqrt(disc)) is the smaller root without cancellation.
  return {Contact::kAhead, c / (-b + std::sqrt(disc))};
}

}  // namespace

InteractionParams InteractionParams::from_seconds(double k, double tau0_seconds, double fps, double radius,
                                                  double tau_max_frames, double tau_min) {
  InteractionParams p;
  p.k = k;
  p.fps = fps;
  p.tau0 = tau0_seconds * fps;
  p.tau_max = tau_max_frames > 0.0 ? tau_max_frames : 3.0 * p.tau0;
  p.radius = radius;
  p.tau_min = tau_min;
  return p;
}

void InteractionParams::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (!(k > 0.0)) fail("k must be positive");
  if (!(tau0 > 0.0)) fail("tau0 must be positive");
  if (!(tau_max > tau0)) fail("tau_max must exceed tau0");
  if (!(radius > 0.0)) fail("particle radius must be positive");
  if (!(tau_min > 0.0 && tau_min < tau_max)) fail("tau_min must lie in (0, tau_max)");
  if (!(fps > 0.0)) fail("fps must be positive");
  if (cutoff < 0.0) fail("cutoff must be non-negative");
}

std::optional<double> time_to_collision(Vec2 w, Vec2 v, double radius, double tau_min) {
  const Root root = collision_root(w, v, radius);
  switch (root.contact) {
    case Contact::kNone: return std::nullopt;
    case Contact::kOverlap: return tau_min;
    case Contact::kAhead: return std::max(root.tau, tau_min);
  }
  return std::nullopt;
}

std::optional<double> time_to_collision(const CharacteristicParticle& pi, const CharacteristicParticle& pj,
                                        double radius, double tau_min) {
  return time_to_collision(pj.position - pi.position, pj.velocity - pi.velocity, radius, tau_min);
}

double interaction_energy(double tau, const InteractionParams& params) {
  if (!(tau >= params.tau_min)) {
    throw Error(ErrorCode::kDomainError, "tau below tau_min; clamp before evaluating the energy");
  }
  if (tau > params.tau_max) return 0.0;
  return params.k / (tau * tau) * std::exp(-tau / params.tau0);
}

double energy_derivative(double tau, const InteractionParams& params) {
  const double t2 = tau * tau;
  return -params.k * std::exp(-tau / params.tau0) * (2.0 / (t2 * tau) + 1.0 / (t2 * params.tau0));
}

ForceVector repulsive_force(Vec2 xi, Vec2 vi, Vec2 xj, Vec2 vj, const InteractionParams& params) {
  const Vec2 w = xj - xi;
  const Vec2 v = vj - vi;
  const Root root = collision_root(w, v, params.radius);
  if (root.contact != Contact::kAhead) return {};
  const double tau = root.tau;
  if (tau > params.tau_max) return {};

  const double denom = squared_norm(v) * tau + dot(w, v);
  if (std::fabs(denom) <= kTangencyEps) return {};

  // grad_w tau = -(v tau + w) / (a tau + b) and grad_{x_i} = -grad_w, so
  // F_i = -dE/dtau * grad_{x_i} tau = dE/dtau * grad_w tau. Below tau_min the
  // energy slope is held at its clamp value; the direction still comes from
  // the true root.
  const Vec2 grad_w = (v * tau + w) * (-1.0 / denom);
  const double dE = energy_derivative(std::max(tau, params.tau_min), params);
  return {dE * grad_w.x, dE * grad_w.y};
}

ForceVector repulsive_force(const CharacteristicParticle& pi, const CharacteristicParticle& pj,
                            const InteractionParams& params) {
  return repulsive_force(pi.position, pi.velocity, pj.position, pj.velocity, params);
}

ForceVector net_force(const CharacteristicParticle& pi, std::span<const CharacteristicParticle> neighbors,
                      const InteractionParams& params) {
  ForceVector total;
  for (const auto& pj : neighbors) {
    const ForceVector f = repulsive_force(pi, pj, params);
    total.fx += f.fx;
    total.fy += f.fy;
  }
  return total;
}

std::vector<ForceVector> frame_force_vectors(std::span<const CharacteristicParticle> particles,
                                             const InteractionParams& params) {
  const std::size_t n = particles.size();
  std::vector<ForceVector> forces(n);
  const double cutoff2 = params.cutoff * params.cutoff;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = particles[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& pj = particles[j];
      const Vec2 w = pj.position - pi.position;
      if (cutoff2 > 0.0 && squared_norm(w) > cutoff2) continue;
      // Cheap rejection of diverging or relatively stationary pairs.
      const Vec2 v = pj.velocity - pi.velocity;
      if (dot(w, v) >= 0.0) continue;
      const ForceVector f = repulsive_force(pi.position, pi.velocity, pj.position, pj.velocity, params);
      forces[i].fx += f.fx;
      forces[i].fy += f.fy;
      forces[j].fx -= f.fx;
      forces[j].fy -= f.fy;
    }
  }
  return forces;
}

std::vector<double> frame_forces(std::span<const CharacteristicParticle> particles, const InteractionParams& params) {
  const auto vectors = frame_force_vectors(particles, params);
  std::vector<double> out(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = vectors[i].magnitude();
  return out;
}

void write_forces_csv(std::ostream& out, std::span<const CharacteristicParticle> particles,
                      std::span<const ForceVector> forces, bool header) {
  if (header) out << "frame,cell,fx,fy,fmag\n";
  for (std::size_t i = 0; i < particles.size() && i < forces.size(); ++i) {
    out << particles[i].frame_index << ',' << particles[i].cell_index << ',' << forces[i].fx << ',' << forces[i].fy
        << ',' << forces[i].magnitude() << '\n';
  }
}

}  // namespace crowdflux
