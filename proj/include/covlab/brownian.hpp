#pragma once

// Planar Brownian motion: annulus hitting laws, exit times, Wiener sausage
// coverage with excursion counting, and torus epsilon-cover times.
//
// Two engines. Fixed-dt Gaussian stepping where elapsed time or coverage
// matters; walk on spheres (planar.hpp) where only hit locations matter.
// Paths at step dt / 2^k are refinements of the dt path by Brownian bridge
// midpoints, so runs at different k with the same seed are coupled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "covlab/parallel.hpp"
#include "covlab/planar.hpp"
#include "covlab/rng.hpp"
#include "covlab/scales.hpp"
#include "covlab/srw.hpp"
#include "covlab/stats.hpp"

namespace covlab {

/// (log r3 - log r2)/(log r3 - log r1).
inline double annulus_hit_prob_formula(double r1, double r2, double r3) {
  if (!(0.0 < r1 && r1 < r2 && r2 < r3)) throw std::invalid_argument("need 0 < r1 < r2 < r3");
  return (std::log(r3) - std::log(r2)) / (std::log(r3) - std::log(r1));
}

/// Exit of the annulus r1 < |z| < r3 from `pos` by walk on spheres.
inline AnnulusExit sample_annulus_side(Vec2 pos, double r1, double r3, double tol, Stream& rng) {
  if (!(0.0 < r1 && r1 < r3)) throw std::invalid_argument("need 0 < r1 < r3");
  const double rho = pos.norm();
  if (!(r1 < rho && rho < r3)) throw std::invalid_argument("start must lie inside the annulus");
  if (!(tol > 0.0 && tol < (r3 - r1) / 100.0))
    throw std::invalid_argument("tolerance must be in (0, (r3 - r1)/100)");
  return wos_annulus(pos, r1, r3, tol, rng);
}

/// Gaussian path with base step dt refined `refine` times by bridge midpoints.
/// Each base step consumes two normals from `gauss` and 2(2^refine - 1) from
/// `bridge`, level by level, so level k+1 extends level k.
class GaussianStepper {
 public:
  GaussianStepper(double dt, int refine, Stream gauss, Stream bridge)
      : dt_(dt), refine_(refine), sub_(std::size_t{1} << refine), gauss_(gauss), bridge_(bridge),
        buf_(sub_ + 1) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (refine < 0 || refine > 10) throw std::invalid_argument("refine must be in [0, 10]");
  }

  double sub_dt() const { return dt_ / static_cast<double>(sub_); }

  /// Advances one base step from `z`; calls f(point) at each of the 2^refine
  /// sub-step endpoints in time order. Stops early when f returns true and
  /// reports how many sub-steps were taken.
  template <class F>
  std::size_t advance(Vec2& z, F&& f) {
    const double sd = std::sqrt(dt_);
    buf_[0] = z;
    buf_[sub_] = {z.x + sd * gauss_.normal(), z.y + sd * gauss_.normal()};
    for (std::size_t half = sub_ / 2, len = sub_; half >= 1; len = half, half /= 2) {
      const double s = std::sqrt(dt_ * static_cast<double>(len) / static_cast<double>(sub_) / 4.0);
      for (std::size_t i = half; i < sub_; i += len) {
        const Vec2 a = buf_[i - half], b = buf_[i + half];
        buf_[i] = {0.5 * (a.x + b.x) + s * bridge_.normal(), 0.5 * (a.y + b.y) + s * bridge_.normal()};
      }
    }
    for (std::size_t i = 1; i <= sub_; ++i) {
      if (f(buf_[i])) {
        z = buf_[i];
        return i;
      }
    }
    z = buf_[sub_];
    return sub_;
  }

 private:
  double dt_;
  int refine_;
  std::size_t sub_;
  Stream gauss_, bridge_;
  std::vector<Vec2> buf_;
};

struct PlanarPath {
  double dt = 0.0;
  std::vector<Vec2> positions;
  double elapsed() const {
    return positions.empty() ? 0.0 : dt * static_cast<double>(positions.size() - 1);
  }
};

inline PlanarPath sample_path(Vec2 start, double dt, std::int64_t steps, std::uint64_t seed,
                              std::int64_t run) {
  const Stream base = Stream::for_run(seed, static_cast<std::uint64_t>(run));
  GaussianStepper g(dt, 0, base.substream(1), base.substream(2));
  PlanarPath p;
  p.dt = dt;
  p.positions.push_back(start);
  for (std::int64_t i = 0; i < steps; ++i)
    g.advance(start, [&](const Vec2& q) { p.positions.push_back(q); return false; });
  return p;
}

// ---------------------------------------------------------------------------
// Exit times from D(0, r).

/// First sub-step time at which |B| >= r, for B started at the origin.
inline double brownian_exit_time(double r, double dt, int refine, std::uint64_t seed,
                                 std::int64_t run) {
  const Stream base = Stream::for_run(seed, static_cast<std::uint64_t>(run));
  GaussianStepper g(dt, refine, base.substream(1), base.substream(2));
  Vec2 z;
  const double r2 = r * r;
  std::int64_t base_steps = 0;
  for (;;) {
    const auto k = g.advance(z, [&](const Vec2& q) { return q.x * q.x + q.y * q.y >= r2; });
    if (z.x * z.x + z.y * z.y >= r2)
      return dt * static_cast<double>(base_steps) + g.sub_dt() * static_cast<double>(k);
    ++base_steps;
  }
}

struct BrownianExitStats {
  Moments time;
  double tail_fraction = 0.0;  // outside (r^{2-eps}, r^{2+eps})
  std::vector<double> samples;
};

inline BrownianExitStats brownian_exit_stats(double r, std::int64_t samples, std::uint64_t seed,
                                             double dt = 1e-3, int refine = 0, double eps = 0.25,
                                             int workers = 1) {
  if (!(r >= 1.0)) throw std::invalid_argument("brownian_exit_stats needs r >= 1");
  if (samples <= 0) throw std::invalid_argument("samples must be positive");
  BrownianExitStats s;
  s.samples = parallel_map(samples, workers,
                           [&](std::int64_t i) { return brownian_exit_time(r, dt, refine, seed, i); });
  s.time = moments(s.samples);
  const double lo = std::pow(r, 2.0 - eps), hi = std::pow(r, 2.0 + eps);
  std::int64_t out = 0;
  for (double t : s.samples) out += (t <= lo || t >= hi);
  s.tail_fraction = static_cast<double>(out) / static_cast<double>(samples);
  return s;
}

// ---------------------------------------------------------------------------
// Wiener sausage coverage.

/// Cells of side h centred at (i h, j h) with centre in D(0, r).
class SausageGrid {
 public:
  SausageGrid(double r, double h) : r_(r), h_(h), k_(static_cast<std::int64_t>(std::floor(r / h))) {
    if (!(r > 0.0 && h > 0.0)) throw std::invalid_argument("need r > 0 and h > 0");
    const std::int64_t n = 2 * k_ + 1;
    flags_.assign(static_cast<std::size_t>(n * n), 0);
    row_half_.resize(static_cast<std::size_t>(n));
    for (std::int64_t j = -k_; j <= k_; ++j) {
      const double y = static_cast<double>(j) * h;
      std::int64_t half = static_cast<std::int64_t>(std::floor(std::sqrt(std::max(0.0, r * r - y * y)) / h));
      while (half >= 0 && sq(static_cast<double>(half) * h) + y * y > r * r) --half;
      while (sq(static_cast<double>(half + 1) * h) + y * y <= r * r) ++half;
      row_half_[static_cast<std::size_t>(j + k_)] = half;
      for (std::int64_t i = -half; i <= half; ++i) flags_[idx(i, j)] = 1;
      uncovered_ += 2 * half + 1;
    }
    total_ = uncovered_;
  }

  double h() const { return h_; }
  std::int64_t uncovered() const { return uncovered_; }
  std::int64_t total() const { return total_; }
  bool covered() const { return uncovered_ == 0; }

  /// Marks every cell whose centre is within `radius` of p.
  void mark_disk(Vec2 p, double radius) {
    if (radius <= 0.0) return;
    const auto jlo = std::max(-k_, static_cast<std::int64_t>(std::ceil((p.y - radius) / h_)));
    const auto jhi = std::min(k_, static_cast<std::int64_t>(std::floor((p.y + radius) / h_)));
    for (std::int64_t j = jlo; j <= jhi; ++j) {
      const double dy = static_cast<double>(j) * h_ - p.y;
      const double w2 = radius * radius - dy * dy;
      if (w2 < 0.0) continue;
      const double w = std::sqrt(w2);
      const std::int64_t half = row_half_[static_cast<std::size_t>(j + k_)];
      auto ilo = std::max(-half, static_cast<std::int64_t>(std::ceil((p.x - w) / h_)));
      auto ihi = std::min(half, static_cast<std::int64_t>(std::floor((p.x + w) / h_)));
      for (std::int64_t i = ilo; i <= ihi; ++i) {
        auto& f = flags_[idx(i, j)];
        if (f) {
          const double dx = static_cast<double>(i) * h_ - p.x;
          if (dx * dx + dy * dy <= radius * radius) {
            f = 0;
            --uncovered_;
          }
        }
      }
    }
  }

  bool is_covered(std::int64_t i, std::int64_t j) const { return flags_[idx(i, j)] == 0; }

 private:
  static double sq(double v) { return v * v; }
  std::size_t idx(std::int64_t i, std::int64_t j) const {
    return static_cast<std::size_t>((j + k_) * (2 * k_ + 1) + (i + k_));
  }
  double r_, h_;
  std::int64_t k_;
  std::vector<std::uint8_t> flags_;
  std::vector<std::int64_t> row_half_;
  std::int64_t uncovered_ = 0, total_ = 0;
};

struct SausageOptions {
  double R = 0.1;                 // outer circle 2 R wp(r)
  double dt = 0.01;               // base step
  int refine = 0;                 // effective step dt / 2^refine
  double h = 0.2;
  double sausage_radius = 1.0;
  double inner = 0.0;             // 0 selects 2r
  double outer = 0.0;             // 0 selects 2 R wp(r)
  double near_margin = 1.0;       // Gaussian stepping inside r + s + margin
  double wos_tol = 1e-6;
  std::int64_t budget_steps = 10'000'000'000;
  bool keep_ledger = false;
};

struct SausageRunResult {
  double r = 0.0;
  double cover_time = 0.0;       // near-field time plus expected walk-on-spheres time
  std::int64_t excursions = 0;   // completed, as for the lattice walk
  std::int64_t steps = 0;        // Gaussian sub-steps
  std::int64_t segments = 0;
  bool time_exact = false;
  bool ledger_alternates = true;
  std::int64_t monotonicity_violations = 0;
  std::vector<std::pair<bool, double>> ledger;  // (outer?, time)
  RunStatus status = RunStatus::ok;
};

inline void validate(double r, const SausageOptions& o) {
  if (!(r >= 8.0)) throw std::invalid_argument("sausage runs need r >= 8");
  if (o.inner == 0.0 && o.outer == 0.0 && !(o.R * std::pow(std::log(r), 3) > 1.0))
    throw std::invalid_argument("sausage runs need R (log r)^3 > 1");
  const double eff = o.dt / std::ldexp(1.0, o.refine);
  if (!(eff <= 0.01 * (o.sausage_radius * o.sausage_radius) * (1.0 + 1e-12)))
    throw std::invalid_argument("sausage runs need dt <= 0.01 (in units of the sausage radius)");
  if (!(o.h <= 0.2 * o.sausage_radius * (1.0 + 1e-12) && o.h > 0.0))
    throw std::invalid_argument("sausage runs need 0 < h <= 0.2 (in units of the sausage radius)");
}

/// Runs planar Brownian motion from the origin until the sausage of radius
/// s covers every cell of D(0, r), counting excursions between the circles
/// `inner` and `outer`.
///
/// Near field: fixed-dt Gaussian steps while |B| < r + s + margin + 1/2,
/// tested only at base-step endpoints so refined runs leave at the same
/// point. Far field: outward trips by walk on spheres down to r + s + margin,
/// returns from beyond `outer` by the exact exterior hitting law of `inner`.
/// Every near segment and every far-field phase has its own substream.
inline SausageRunResult sausage_cover_run(double r, std::uint64_t seed, std::int64_t run,
                                          const SausageOptions& o = {}) {
  validate(r, o);
  const double inner = o.inner > 0.0 ? o.inner : 2.0 * r;
  const double outer = o.outer > 0.0 ? o.outer : 2.0 * o.R * wp(r);
  const double near = r + o.sausage_radius + o.near_margin;
  const double leave = near + 0.5 * o.sausage_radius;
  if (!(leave + 1.0 < inner && inner < outer))
    throw std::invalid_argument("need r + s + margin + s/2 + 1 < inner < outer");
  const double mark_radius = o.sausage_radius - o.h / std::numbers::sqrt2;

  SausageRunResult res;
  res.r = r;
  SausageGrid grid(r, o.h);
  const Stream base = Stream::for_run(seed, static_cast<std::uint64_t>(run));
  auto near_stream = [&](std::int64_t seg, std::uint64_t k) {
    return base.substream((std::uint64_t{100} << 40) + 2 * static_cast<std::uint64_t>(seg) + k);
  };
  auto far_stream = [&](std::int64_t seg, std::uint64_t phase) {
    return base.substream((std::uint64_t{101} << 40) + (static_cast<std::uint64_t>(seg) << 20) + phase);
  };

  Vec2 z;
  double t = 0.0;
  std::int64_t outer_hits = 0;
  bool outward = true;
  int last_kind = -1;  // 1 outer, 0 inner
  const double leave2 = leave * leave;
  grid.mark_disk(z, mark_radius);
  std::int64_t last_uncovered = grid.uncovered();
  auto record = [&](bool is_outer) {
    if (last_kind == (is_outer ? 1 : 0) || (last_kind < 0 && !is_outer)) res.ledger_alternates = false;
    last_kind = is_outer ? 1 : 0;
    if (o.keep_ledger) res.ledger.push_back({is_outer, t});
  };

  for (std::int64_t seg = 0; !grid.covered(); ++seg) {
    res.segments = seg + 1;
    GaussianStepper g(o.dt, o.refine, near_stream(seg, 0), near_stream(seg, 1));
    for (;;) {
      if (res.steps >= o.budget_steps) {
        res.status = RunStatus::budget_exceeded;
        res.cover_time = t;
        return res;
      }
      const auto taken = g.advance(z, [&](const Vec2& q) {
        grid.mark_disk(q, mark_radius);
        if (grid.uncovered() > last_uncovered) ++res.monotonicity_violations;
        last_uncovered = grid.uncovered();
        return grid.covered();
      });
      res.steps += static_cast<std::int64_t>(taken);
      t += g.sub_dt() * static_cast<double>(taken);
      if (grid.covered() || z.x * z.x + z.y * z.y >= leave2) break;
    }
    if (grid.covered()) break;
    for (std::uint64_t phase = 0;; ++phase) {
      if (phase >= (std::uint64_t{1} << 20)) throw std::runtime_error("far-field phase overflow");
      Stream far = far_stream(seg, phase);
      if (outward) {
        const auto ex = wos_annulus(z, near, outer, o.wos_tol, far);
        t += ex.mean_time;
        z = ex.point;
        if (ex.inner) break;
        ++outer_hits;
        record(true);
        outward = false;
      } else {
        const double th = exterior_hit_angle(z, inner, far);
        z = {inner * std::cos(th), inner * std::sin(th)};
        record(false);
        outward = true;
      }
    }
  }
  res.cover_time = t;
  res.excursions = outer_hits > 0 ? outer_hits - 1 : 0;
  return res;
}

// ---------------------------------------------------------------------------
// Torus epsilon-cover.

struct TorusOptions {
  double dt = 0.0;                // 0 selects eps^2 / 25
  double max_time = 1e6;
  int grid_per_axis = 0;          // 0 selects ceil(4 / eps)
};

struct TorusCoverResult {
  double epsilon = 0.0;
  double cover_time = 0.0;
  double normalized = 0.0;        // cover_time / (log eps)^2
  std::int64_t targets = 0;
  std::int64_t steps = 0;
  RunStatus status = RunStatus::ok;
};

/// Brownian motion on the unit torus from the origin until every target
/// k/N, k = 0..N-1 per axis, has been within eps of a sampled position.
/// With N_coarse dividing N_fine the target sets are nested.
inline TorusCoverResult torus_cover_time(double eps, std::uint64_t seed, std::int64_t run,
                                         const TorusOptions& o = {}) {
  if (!(eps > 0.0 && eps <= 0.05)) throw std::invalid_argument("torus cover needs 0 < eps <= 0.05");
  const double dt = o.dt > 0.0 ? o.dt : eps * eps / 25.0;
  if (!(dt <= eps * eps / 25.0 * (1.0 + 1e-12))) throw std::invalid_argument("torus cover needs dt <= eps^2/25");
  const int n = o.grid_per_axis > 0 ? o.grid_per_axis : static_cast<int>(std::ceil(4.0 / eps - 1e-9));
  if (1.0 / n > eps / 4.0 * (1.0 + 1e-9)) throw std::invalid_argument("target spacing must be <= eps/4");

  TorusCoverResult res;
  res.epsilon = eps;
  res.targets = static_cast<std::int64_t>(n) * n;
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(res.targets), 0);
  std::int64_t left = res.targets;
  const double e2 = eps * eps;
  auto mark = [&](double x, double y) {
    const auto ilo = static_cast<std::int64_t>(std::ceil((x - eps) * n));
    const auto ihi = static_cast<std::int64_t>(std::floor((x + eps) * n));
    const auto jlo = static_cast<std::int64_t>(std::ceil((y - eps) * n));
    const auto jhi = static_cast<std::int64_t>(std::floor((y + eps) * n));
    for (std::int64_t j = jlo; j <= jhi; ++j) {
      const double dy = static_cast<double>(j) / n - y;
      const std::int64_t jj = ((j % n) + n) % n;
      for (std::int64_t i = ilo; i <= ihi; ++i) {
        const double dx = static_cast<double>(i) / n - x;
        if (dx * dx + dy * dy > e2) continue;
        const std::int64_t ii = ((i % n) + n) % n;
        auto& h = hit[static_cast<std::size_t>(jj * n + ii)];
        if (!h) { h = 1; --left; }
      }
    }
  };
  auto wrap = [](double v) { return v - std::ceil(v - 0.5); };  // into (-1/2, 1/2]

  Stream g = Stream::for_run(seed, static_cast<std::uint64_t>(run), 1);
  const double sd = std::sqrt(dt);
  double x = 0.0, y = 0.0;
  mark(x, y);
  while (left > 0) {
    if (static_cast<double>(res.steps) * dt >= o.max_time) { res.status = RunStatus::budget_exceeded; break; }
    x = wrap(x + sd * g.normal());
    y = wrap(y + sd * g.normal());
    ++res.steps;
    mark(x, y);
  }
  res.cover_time = static_cast<double>(res.steps) * dt;
  const double le = std::log(eps);
  res.normalized = res.cover_time / (le * le);
  return res;
}

}  // namespace covlab
