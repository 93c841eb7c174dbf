#pragma once

// Planar simple random walk: hitting times, cover times, cover radii and
// excursion counts between dD_{2r} and dD_{wp(r)}.
//
// Hitting times use the n >= 0 convention: a walk already on the target
// boundary has zeta = 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "covlab/lattice.hpp"
#include "covlab/parallel.hpp"
#include "covlab/planar.hpp"
#include "covlab/rng.hpp"
#include "covlab/scales.hpp"
#include "covlab/stats.hpp"

namespace covlab {

inline constexpr std::int64_t kDefaultStepBudget = 10'000'000'000;

// Substream ids. Distinct experiments may share (seed, run); distinct
// purposes inside one run may not.
namespace substream {
inline constexpr std::uint64_t walk = 1;
inline constexpr std::uint64_t far_field = 2;
inline constexpr std::uint64_t hitting = 3;
inline constexpr std::uint64_t exit_time = 4;
inline constexpr std::uint64_t radius_path = 5;
}  // namespace substream

enum class RunStatus { ok, budget_exceeded };

inline const char* to_string(RunStatus s) {
  return s == RunStatus::ok ? "ok" : "budget_exceeded";
}

class WalkState {
 public:
  WalkState(LatticePoint start, Stream rng) : pos(start), rng(rng) {}

  LatticePoint pos;
  std::int64_t time = 0;
  Stream rng;

  /// One uniform nearest-neighbour step. Two random bits per step.
  void step() {
    if (left_ == 0) {
      bits_ = rng.next_u64();
      left_ = 32;
    }
    const auto d = static_cast<unsigned>(bits_ & 3u);
    bits_ >>= 2;
    --left_;
    pos.x += kDx[d];
    pos.y += kDy[d];
    ++time;
  }

 private:
  static constexpr std::int64_t kDx[4] = {1, -1, 0, 0};
  static constexpr std::int64_t kDy[4] = {0, 0, 1, -1};
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

struct Hit {
  LatticePoint point;
  std::int64_t zeta = 0;  // steps taken by this call
  RunStatus status = RunStatus::ok;
};

/// Runs the walk until it first stands on dD_r.
inline Hit run_until_hit(WalkState& w, double r, std::int64_t budget = kDefaultStepBudget) {
  const Radius R = Radius::from_real(r);
  const std::int64_t t0 = w.time;
  Hit h;
  if (on_boundary(w.pos, R)) {
    h.point = w.pos;
    return h;
  }
  if (in_disk(w.pos, R)) {
    // From inside, the first point outside D_r is on dD_r.
    while (w.pos.norm2() <= R.limit) {
      if (w.time - t0 >= budget) { h.status = RunStatus::budget_exceeded; break; }
      w.step();
    }
  } else {
    const std::int64_t near = (isqrt(R.limit) + 2) * (isqrt(R.limit) + 2);
    for (;;) {
      if (w.time - t0 >= budget) { h.status = RunStatus::budget_exceeded; break; }
      w.step();
      if (w.pos.norm2() <= near && on_boundary(w.pos, R.limit)) break;
    }
  }
  h.point = w.pos;
  h.zeta = w.time - t0;
  return h;
}

// ---------------------------------------------------------------------------
// Cover runs with excursion counting.

/// How the walk is advanced far from D_r.
///  none:   every step on the lattice.
///  ret:    after reaching dD_wp the walk jumps to the circle of radius l_in
///          with the exact Brownian exterior hitting law, then resumes on
///          the lattice; likewise whenever a return trip leaves D_{l_out}.
///  full:   as ret, and in addition the outward trip switches to walk on
///          spheres in the annulus l_in < |z| < wp + 1/2 once outside
///          D_{l_out}.
enum class FarField { none, ret, full };

inline const char* to_string(FarField f) {
  switch (f) {
    case FarField::none: return "none";
    case FarField::ret: return "return";
    case FarField::full: return "full";
  }
  return "?";
}

inline FarField far_field_from_string(const std::string& s) {
  if (s == "none") return FarField::none;
  if (s == "return") return FarField::ret;
  if (s == "full") return FarField::full;
  throw std::invalid_argument("far field mode must be none, return or full: " + s);
}

struct CoverOptions {
  FarField far_field = FarField::none;
  double l_in = 0.0;   // 0 selects 3r
  double l_out = 0.0;  // 0 selects 4r
  std::int64_t budget = kDefaultStepBudget;
  bool keep_ledger = false;
  double wos_tol = 1e-3;
};

struct LedgerHit {
  enum Kind : std::uint8_t { inner, outer } kind;
  std::int64_t step;
};

struct ExcursionLedger {
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  std::vector<LedgerHit> hits;

  /// First hit is outer (s(0)), kinds alternate, steps strictly increase.
  bool well_formed() const {
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const auto want = (i % 2 == 0) ? LedgerHit::outer : LedgerHit::inner;
      if (hits[i].kind != want) return false;
      if (i > 0 && hits[i].step <= hits[i - 1].step) return false;
    }
    return true;
  }
};

struct CoverRunResult {
  double r = 0.0;
  std::int64_t cover_time = 0;   // T_r, lattice steps
  std::int64_t excursions = 0;   // N_r, completed excursions
  std::int64_t wall_steps = 0;   // lattice steps simulated
  std::uint64_t seed = 0;
  std::int64_t run = 0;
  RunStatus status = RunStatus::ok;
  bool time_exact = true;        // false once any far-field jump was taken
  std::int64_t far_field_jumps = 0;
  ExcursionLedger ledger;
};

struct FarFieldGeometry {
  double l_in = 0.0;
  double l_out = 0.0;
  std::int64_t l_out2 = 0;

  static FarFieldGeometry make(double r, double outer, double l_in, double l_out) {
    FarFieldGeometry g;
    g.l_in = l_in > 0.0 ? l_in : 3.0 * r;
    g.l_out = l_out > 0.0 ? l_out : 4.0 * r;
    if (g.l_in < 2.0 * r + 3.0) throw std::invalid_argument("far field needs l_in >= 2r + 3");
    if (g.l_out < g.l_in + 1.0) throw std::invalid_argument("far field needs l_out >= l_in + 1");
    if (g.l_out + 1.0 >= outer) throw std::invalid_argument("far field needs l_out + 1 < wp(r)");
    g.l_out2 = static_cast<std::int64_t>(std::floor(g.l_out * g.l_out));
    return g;
  }

  LatticePoint land(double angle) const {
    return {std::llround(l_in * std::cos(angle)), std::llround(l_in * std::sin(angle))};
  }

  /// Lattice point reached by Brownian motion from `from` on the circle l_in.
  LatticePoint return_jump(Vec2 from, Stream& far) const {
    return land(exterior_hit_angle(from, l_in, far));
  }
};

inline Vec2 to_vec(const LatticePoint& p) {
  return {static_cast<double>(p.x), static_cast<double>(p.y)};
}

/// Walk from the origin until D_r is covered, counting excursions between
/// dD_{2r} and dD_{wp(r)}.
inline CoverRunResult simulate_cover(double r, std::uint64_t seed, std::int64_t run,
                                     const CoverOptions& opt = {}) {
  if (!(r >= 8.0)) throw std::invalid_argument("simulate_cover needs r >= 8");
  const double P = wp(r);
  const Radius inner = Radius::from_real(2.0 * r);
  const Radius outer = Radius::from_real(P);
  FarFieldGeometry geo;
  if (opt.far_field != FarField::none) geo = FarFieldGeometry::make(r, P, opt.l_in, opt.l_out);
  const std::int64_t inner_near = (isqrt(inner.limit) + 2) * (isqrt(inner.limit) + 2);

  CoverRunResult res;
  res.r = r;
  res.seed = seed;
  res.run = run;
  res.ledger.inner_radius = 2.0 * r;
  res.ledger.outer_radius = P;

  VisitedGrid grid(r);
  WalkState w({0, 0}, Stream::for_run(seed, static_cast<std::uint64_t>(run), substream::walk));
  Stream far = Stream::for_run(seed, static_cast<std::uint64_t>(run), substream::far_field);
  grid.mark(w.pos);

  bool outward = true;  // heading for dD_wp (initial trip or an excursion)
  std::int64_t outer_hits = 0;
  auto record = [&](LedgerHit::Kind k) {
    if (opt.keep_ledger) res.ledger.hits.push_back({k, w.time});
  };
  auto jump_back = [&](Vec2 from) {
    w.pos = geo.return_jump(from, far);
    ++res.far_field_jumps;
  };

  while (!grid.covered()) {
    if (w.time >= opt.budget) { res.status = RunStatus::budget_exceeded; break; }
    w.step();
    if (grid.mark(w.pos)) continue;  // a newly visited disk point is never on a boundary
    const std::int64_t n2 = w.pos.norm2();
    if (outward) {
      if (n2 > outer.limit) {
        ++outer_hits;
        record(LedgerHit::outer);
        outward = false;
        if (opt.far_field != FarField::none) jump_back(to_vec(w.pos));
      } else if (opt.far_field == FarField::full && n2 > geo.l_out2) {
        const auto ex = wos_annulus(to_vec(w.pos), geo.l_in, P + 0.5, opt.wos_tol, far);
        ++res.far_field_jumps;
        if (ex.inner) {
          w.pos = {std::llround(ex.point.x), std::llround(ex.point.y)};
        } else {
          ++outer_hits;
          record(LedgerHit::outer);
          outward = false;
          jump_back(ex.point);
        }
      }
    } else {
      if (n2 <= inner_near && on_boundary(w.pos, inner.limit)) {
        record(LedgerHit::inner);
        outward = true;
      } else if (opt.far_field != FarField::none && n2 > geo.l_out2) {
        jump_back(to_vec(w.pos));
      }
    }
  }
  res.cover_time = w.time;
  res.wall_steps = w.time;
  res.excursions = outer_hits > 0 ? outer_hits - 1 : 0;
  res.time_exact = res.far_field_jumps == 0;
  return res;
}

// ---------------------------------------------------------------------------
// Cover radius trajectories for the LIL statistic.

struct RadiusCheckpoint {
  std::int64_t n = 0;
  double radius = 0.0;
  bool saturated = false;
};

/// Geometric checkpoint times n_k = ceil(first * ratio^k) up to `last`.
inline std::vector<std::int64_t> geometric_checkpoints(std::int64_t first, std::int64_t last,
                                                       double ratio) {
  if (first < 1 || last < first || !(ratio > 1.0))
    throw std::invalid_argument("bad checkpoint schedule");
  std::vector<std::int64_t> out;
  double v = static_cast<double>(first);
  while (v <= static_cast<double>(last)) {
    const auto n = static_cast<std::int64_t>(std::ceil(v));
    if (out.empty() || n > out.back()) out.push_back(n);
    v *= ratio;
  }
  return out;
}

/// R_n at each checkpoint for a walk from the origin; the grid tracks D_extent.
inline std::vector<RadiusCheckpoint> cover_radius_path(double extent,
                                                       const std::vector<std::int64_t>& checkpoints,
                                                       std::uint64_t seed, std::int64_t run) {
  VisitedGrid grid(extent);
  WalkState w({0, 0}, Stream::for_run(seed, static_cast<std::uint64_t>(run), substream::radius_path));
  grid.mark(w.pos);
  std::vector<RadiusCheckpoint> out;
  for (std::int64_t n : checkpoints) {
    while (w.time < n) {
      w.step();
      grid.mark(w.pos);
    }
    const auto cr = cover_radius(grid);
    out.push_back({n, cr.value, cr.saturated});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hitting probabilities.

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t hits = 0;
  std::int64_t samples = 0;
  std::int64_t budget_failures = 0;
};

inline Estimate make_estimate(std::int64_t hits, std::int64_t samples, std::int64_t failures = 0) {
  Proportion p{hits, samples};
  return {p.estimate(), p.std_error(), hits, samples, failures};
}

struct HittingOptions {
  bool symmetrized = false;  // start at a uniformly chosen lattice image of the start point
  std::int64_t batch = 1000;
  int workers = 1;
  std::int64_t budget = kDefaultStepBudget;
  std::optional<LatticePoint> start;  // default (floor(r) + 1, 0)
};

/// Default start on dD_r: the first lattice point beyond r on the positive
/// x-axis.
inline LatticePoint axis_boundary_point(double r) {
  const Radius R = Radius::from_real(r);
  return {isqrt(R.limit) + 1, 0};
}

/// Monte Carlo estimate of P^x{ zeta(rho) < zeta(P) }.
inline Estimate hitting_prob_estimate(double rho, double r, double P, std::int64_t samples,
                                      std::uint64_t seed, const HittingOptions& opt = {}) {
  if (!(rho < r && r < P) || rho < 0.0) throw std::invalid_argument("need 0 <= rho < r < P");
  if (samples <= 0) throw std::invalid_argument("samples must be positive");
  const Radius inner = Radius::from_real(rho), outer = Radius::from_real(P);
  const LatticePoint x0 = opt.start.value_or(axis_boundary_point(r));
  if (!in_disk(x0, outer) && !on_boundary(x0, outer))
    throw std::invalid_argument("start must lie in D_P or on its boundary");
  if (in_disk(x0, inner)) throw std::invalid_argument("start must lie outside D_rho");
  const std::int64_t near = (isqrt(inner.limit) + 2) * (isqrt(inner.limit) + 2);
  const std::int64_t batches = (samples + opt.batch - 1) / opt.batch;

  struct Tally { std::int64_t hits = 0, failures = 0; };
  auto per_batch = [&](std::int64_t b) {
    Stream rng = Stream::for_run(seed, static_cast<std::uint64_t>(b), substream::hitting);
    const std::int64_t count = std::min(opt.batch, samples - b * opt.batch);
    Tally t;
    for (std::int64_t i = 0; i < count; ++i) {
      LatticePoint s = x0;
      if (opt.symmetrized) s = apply_symmetry(static_cast<int>(rng.below(8)), x0);
      WalkState w(s, rng.substream(static_cast<std::uint64_t>(b) * 1'000'003 + static_cast<std::uint64_t>(i) + 16));
      if (on_boundary(w.pos, inner)) { ++t.hits; continue; }
      if (on_boundary(w.pos, outer)) continue;
      bool done = false;
      while (!done) {
        if (w.time >= opt.budget) { ++t.failures; break; }
        w.step();
        const std::int64_t n2 = w.pos.norm2();
        if (n2 > outer.limit) done = true;
        else if (n2 <= near && on_boundary(w.pos, inner.limit)) { ++t.hits; done = true; }
      }
    }
    return t;
  };
  const auto tallies = parallel_map(batches, opt.workers, per_batch);
  std::int64_t hits = 0, failures = 0;
  for (const auto& t : tallies) { hits += t.hits; failures += t.failures; }
  return make_estimate(hits, samples - failures, failures);
}

struct OriginEstimate {
  Estimate estimate;
  double bound = 0.0;  // (1/16)(log P - log r)/log P
  bool meets_bound() const { return estimate.value >= bound - 3.0 * estimate.std_error; }
};

/// Monte Carlo estimate of P^x{ walk visits 0 before dD_P }, x on dD_r.
inline OriginEstimate hit_origin_before(double P, double r, std::int64_t samples,
                                        std::uint64_t seed, const HittingOptions& opt = {}) {
  if (!(0.0 < r && r < P)) throw std::invalid_argument("need 0 < r < P");
  if (samples <= 0) throw std::invalid_argument("samples must be positive");
  const Radius outer = Radius::from_real(P);
  const LatticePoint x0 = opt.start.value_or(axis_boundary_point(r));
  const std::int64_t batches = (samples + opt.batch - 1) / opt.batch;
  struct Tally { std::int64_t hits = 0, failures = 0; };
  auto per_batch = [&](std::int64_t b) {
    Stream rng = Stream::for_run(seed, static_cast<std::uint64_t>(b), substream::hitting + 100);
    const std::int64_t count = std::min(opt.batch, samples - b * opt.batch);
    Tally t;
    for (std::int64_t i = 0; i < count; ++i) {
      LatticePoint s = x0;
      if (opt.symmetrized) s = apply_symmetry(static_cast<int>(rng.below(8)), x0);
      WalkState w(s, rng.substream(static_cast<std::uint64_t>(b) * 1'000'003 + static_cast<std::uint64_t>(i) + 16));
      if (s == LatticePoint{0, 0}) { ++t.hits; continue; }
      if (on_boundary(s, outer)) continue;
      for (;;) {
        if (w.time >= opt.budget) { ++t.failures; break; }
        w.step();
        if (w.pos.x == 0 && w.pos.y == 0) { ++t.hits; break; }
        if (w.pos.norm2() > outer.limit) break;
      }
    }
    return t;
  };
  const auto tallies = parallel_map(batches, opt.workers, per_batch);
  std::int64_t hits = 0, failures = 0;
  for (const auto& t : tallies) { hits += t.hits; failures += t.failures; }
  OriginEstimate out;
  out.estimate = make_estimate(hits, samples - failures, failures);
  out.bound = (std::log(P) - std::log(r)) / (16.0 * std::log(P));
  return out;
}

// ---------------------------------------------------------------------------
// Exit times of D_r from the origin.

struct ExitSample {
  std::int64_t zeta = 0;
  std::int64_t end_norm2 = 0;  // |S_zeta|^2
};

inline ExitSample exit_time_run(double r, std::uint64_t seed, std::int64_t run) {
  WalkState w({0, 0}, Stream::for_run(seed, static_cast<std::uint64_t>(run), substream::exit_time));
  const auto h = run_until_hit(w, r);
  return {h.zeta, h.point.norm2()};
}

struct ExitTimeSummary {
  Moments zeta;
  Moments martingale;             // |S_zeta|^2 - zeta
  double tail_fraction = 0.0;     // zeta outside (r^{2-eps}, r^{2+eps})
  double below_fraction = 0.0;
  double above_fraction = 0.0;
  std::vector<ExitSample> samples;
};

inline ExitTimeSummary exit_time_stats(double r, std::int64_t runs, std::uint64_t seed,
                                       double eps = 0.25, int workers = 1) {
  ExitTimeSummary s;
  s.samples = parallel_map(runs, workers, [&](std::int64_t i) { return exit_time_run(r, seed, i); });
  std::vector<double> z, m;
  const double lo = std::pow(r, 2.0 - eps), hi = std::pow(r, 2.0 + eps);
  std::int64_t below = 0, above = 0;
  for (const auto& e : s.samples) {
    z.push_back(static_cast<double>(e.zeta));
    m.push_back(static_cast<double>(e.end_norm2 - e.zeta));
    if (static_cast<double>(e.zeta) <= lo) ++below;
    if (static_cast<double>(e.zeta) >= hi) ++above;
  }
  s.zeta = moments(z);
  s.martingale = moments(m);
  const auto n = static_cast<double>(runs);
  s.below_fraction = static_cast<double>(below) / n;
  s.above_fraction = static_cast<double>(above) / n;
  s.tail_fraction = s.below_fraction + s.above_fraction;
  return s;
}

}  // namespace covlab
