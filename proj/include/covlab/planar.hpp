#pragma once

// Continuum helpers shared by the lattice fast path and the Brownian engine:
// walk on spheres in a centred annulus and the exact exterior harmonic
// measure of a circle.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "covlab/rng.hpp"

namespace covlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  double norm() const { return std::hypot(x, y); }
};

/// Exit side and point of planar Brownian motion from the annulus
/// r_in < |z| < r_out.
struct AnnulusExit {
  bool inner = false;
  Vec2 point;
  int jumps = 0;
  double mean_time = 0.0;  // sum of d^2/2 over jumps (expected, not sampled)
};

/// Walk on spheres until within `tol` of either circle, then projects onto
/// it. Each jump moves to a uniform point on the largest circle centred at
/// the current position that stays inside the annulus.
inline AnnulusExit wos_annulus(Vec2 z, double r_in, double r_out, double tol, Stream& rng) {
  AnnulusExit out;
  for (;;) {
    const double rho = z.norm();
    const double din = rho - r_in;
    const double dout = r_out - rho;
    const double d = std::min(din, dout);
    if (d < tol) {
      out.inner = din < dout;
      const double target = out.inner ? r_in : r_out;
      const double s = target / rho;
      out.point = {z.x * s, z.y * s};
      return out;
    }
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    z.x += d * std::cos(th);
    z.y += d * std::sin(th);
    out.mean_time += 0.5 * d * d;
    ++out.jumps;
  }
}

/// Angle of the first hit of the circle |w| = radius by Brownian motion
/// started at z, |z| > radius. The law is the exterior Poisson kernel, a
/// wrapped Cauchy distribution about arg z with concentration radius/|z|.
inline double exterior_hit_angle(Vec2 z, double radius, Stream& rng) {
  const double c = radius / z.norm();
  const double u = rng.uniform_open();
  const double t = std::tan(std::numbers::pi * (u - 0.5));
  return std::atan2(z.y, z.x) + 2.0 * std::atan((1.0 - c) / (1.0 + c) * t);
}

/// CDF of the angular offset above, on (-pi, pi].
inline double exterior_hit_cdf(double offset, double c) {
  return 0.5 + std::atan((1.0 + c) / (1.0 - c) * std::tan(0.5 * offset)) / std::numbers::pi;
}

}  // namespace covlab
