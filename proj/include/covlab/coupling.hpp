#pragma once

// I.i.d. excursion sets and the coupling that relates them to the walk's
// own excursions.
//
// An excursion set is the part of D_r visited by a walk started on dD_{2r}
// (from harmonic measure, unless stated otherwise) and stopped on dD_{wp(r)}.
// The coupling is run in diagnostic form: the first excursion A(0) is built
// from a stream of E-sets, the single permitted later discrepancy from a
// stream of F-sets, and the discrepancy indicators xi_i are Bernoulli with
// success probability c1/(log r)^2. The conditional start law nu is replaced
// by the hitting law on dD_{2r} from the axis point of dD_{wp(r)}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "covlab/annulus.hpp"
#include "covlab/lattice.hpp"
#include "covlab/planar.hpp"
#include "covlab/rng.hpp"
#include "covlab/scales.hpp"
#include "covlab/srw.hpp"

namespace covlab {

/// P{ Binomial(m, alpha) > 1 } = 1 - (1-alpha)^m - m alpha (1-alpha)^{m-1}.
inline double xi_tail_prob(std::int64_t m, double alpha) {
  if (m < 0) throw std::invalid_argument("xi_tail_prob needs m >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (m <= 1) return 0.0;
  if (alpha == 1.0) return 1.0;
  const double l = std::log1p(-alpha);
  const auto md = static_cast<double>(m);
  return -std::expm1(md * l) - md * alpha * std::exp((md - 1.0) * l);
}

/// a = 64 log r log3 r / log2 r, r > e^e.
inline double a_threshold(double r) {
  if (!(std::log(r) > std::numbers::e)) throw DomainError("a_threshold needs r > e^e");
  const double l = std::log(r);
  return 64.0 * l * std::log(std::log(l)) / std::log(l);
}

enum class SetKind { C, E, F, biased };

inline const char* to_string(SetKind k) {
  switch (k) {
    case SetKind::C: return "C";
    case SetKind::E: return "E";
    case SetKind::F: return "F";
    case SetKind::biased: return "biased";
  }
  return "?";
}

struct ExcursionSet {
  double r = 0.0;
  std::vector<std::int32_t> covered;  // indices into the context's disk points
  LatticePoint start;
  SetKind kind = SetKind::C;
  RunStatus status = RunStatus::ok;
};

/// Per-radius data shared read-only by all runs.
class ExcursionContext {
 public:
  struct Options {
    bool fast = true;           // walk on spheres outside D_{l_out}
    double l_in = 0.0;          // 0 selects 3r
    double l_out = 0.0;         // 0 selects 4r
    double wos_tol = 1e-3;
    std::int64_t budget = kDefaultStepBudget;
  };

  ExcursionContext(double r, Options opt) : ExcursionContext(r, opt, std::nullopt) {}
  explicit ExcursionContext(double r) : ExcursionContext(r, Options{}, std::nullopt) {}

  /// `harmonic` may supply H_{2r}; otherwise it is solved for.
  ExcursionContext(double r, Options opt, std::optional<BoundaryDistribution> harmonic)
      : r_(r), opt_(opt), disk_(Radius::from_real(r)), inner_(Radius::from_real(2.0 * r)),
        outer_(Radius::from_real(wp(r))) {
    if (!(r >= 8.0)) throw std::invalid_argument("excursion sets need r >= 8");
    points_ = PointIndex(disk_points(disk_));
    origin_ = points_.find({0, 0});
    geo_ = FarFieldGeometry::make(r, wp(r), opt.l_in, opt.l_out);
    harmonic_ = harmonic ? *harmonic : harmonic_measure(2.0 * r, default_truncations(2.0 * r)).law;
    boundary_index_ = PointIndex(harmonic_.support);
    cdf_ = cumulative(harmonic_);
    worst_start_ = axis_boundary_point(wp(r));
  }

  double r() const { return r_; }
  const Options& options() const { return opt_; }
  const PointIndex& points() const { return points_; }
  std::int32_t origin_index() const { return origin_; }
  const BoundaryDistribution& harmonic() const { return harmonic_; }
  const PointIndex& boundary_index() const { return boundary_index_; }
  const LatticePoint& worst_start() const { return worst_start_; }

  LatticePoint sample_harmonic(Stream& rng) const { return sample_from(harmonic_, cdf_, rng); }

  static std::vector<double> cumulative(const BoundaryDistribution& d) {
    std::vector<double> cdf;
    double acc = 0.0;
    for (double w : d.weights) cdf.push_back(acc += w);
    return cdf;
  }

  static LatticePoint sample_from(const BoundaryDistribution& d, const std::vector<double>& cdf,
                                  Stream& rng) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return d.support[static_cast<std::size_t>(it - cdf.begin())];
  }

  /// Walk from `start` until dD_{wp(r)}. visit(p, t) is called for every
  /// lattice position in D_{2r} u dD_{2r}, including the start (t = 0).
  template <class Visit>
  RunStatus walk_to_outer(LatticePoint start, Stream& walk_rng, Stream& far_rng,
                          Visit&& visit) const {
    WalkState w(start, walk_rng);
    const std::int64_t near = (isqrt(inner_.limit) + 2) * (isqrt(inner_.limit) + 2);
    if (w.pos.norm2() <= near) visit(w.pos, w.time);
    for (;;) {
      if (w.time >= opt_.budget) return RunStatus::budget_exceeded;
      w.step();
      const std::int64_t n2 = w.pos.norm2();
      if (n2 <= near) {
        visit(w.pos, w.time);
      } else if (n2 > outer_.limit) {
        return RunStatus::ok;
      } else if (opt_.fast && n2 > geo_.l_out2) {
        const auto ex = wos_annulus(to_vec(w.pos), geo_.l_in, wp(r_) + 0.5, opt_.wos_tol, far_rng);
        if (!ex.inner) return RunStatus::ok;
        w.pos = {std::llround(ex.point.x), std::llround(ex.point.y)};
      }
    }
  }

  /// Hitting point on dD_{2r} of the walk started at `start` outside D_{2r}.
  /// With the fast option, excursions beyond D_{l_out} are replaced by the
  /// exact Brownian return to the circle l_in.
  LatticePoint walk_to_inner(LatticePoint start, Stream& walk_rng, Stream& far_rng,
                             RunStatus& status) const {
    WalkState w(start, walk_rng);
    const std::int64_t near = (isqrt(inner_.limit) + 2) * (isqrt(inner_.limit) + 2);
    status = RunStatus::ok;
    if (opt_.fast && w.pos.norm2() > geo_.l_out2) w.pos = geo_.return_jump(to_vec(w.pos), far_rng);
    for (;;) {
      const std::int64_t n2 = w.pos.norm2();
      if (n2 <= near && on_boundary(w.pos, inner_.limit)) return w.pos;
      if (opt_.fast && n2 > geo_.l_out2) w.pos = geo_.return_jump(to_vec(w.pos), far_rng);
      if (w.time >= opt_.budget) { status = RunStatus::budget_exceeded; return w.pos; }
      w.step();
    }
  }

  bool in_disk(const LatticePoint& p) const { return covlab::in_disk(p, disk_); }

 private:
  double r_;
  Options opt_;
  Radius disk_, inner_, outer_;
  PointIndex points_;
  std::int32_t origin_ = -1;
  FarFieldGeometry geo_;
  BoundaryDistribution harmonic_;
  PointIndex boundary_index_;
  std::vector<double> cdf_;
  LatticePoint worst_start_;
};

// Substream layout for one coupling/iid run: family f, member j ->
// id = (f << 32) + 2 j (+1 for the far-field stream).
namespace substream {
inline constexpr std::uint64_t family_c = 10;
inline constexpr std::uint64_t family_e = 11;
inline constexpr std::uint64_t family_f = 12;
inline constexpr std::uint64_t family_biased = 13;
inline constexpr std::uint64_t family_xi = 14;
inline constexpr std::uint64_t family_direct = 15;
inline constexpr std::uint64_t family_nu = 16;
}  // namespace substream

inline std::uint64_t family_of(SetKind k) {
  switch (k) {
    case SetKind::C: return substream::family_c;
    case SetKind::E: return substream::family_e;
    case SetKind::F: return substream::family_f;
    case SetKind::biased: return substream::family_biased;
  }
  return substream::family_c;
}

struct MemberStreams {
  Stream walk, far, start;
};

inline MemberStreams member_streams(std::uint64_t seed, std::int64_t run, std::uint64_t family,
                                    std::int64_t j) {
  const Stream base = Stream::for_run(seed, static_cast<std::uint64_t>(run));
  const std::uint64_t id = (family << 32) + 4 * static_cast<std::uint64_t>(j);
  return {base.substream(id), base.substream(id + 1), base.substream(id + 2)};
}

/// Last visit time of each disk point during one walk (-1 = never).
class VisitTimes {
 public:
  explicit VisitTimes(std::size_t n) : last_(n, -1) {}
  void reset() {
    for (auto i : touched_) last_[static_cast<std::size_t>(i)] = -1;
    touched_.clear();
  }
  void visit(std::int32_t i, std::int64_t t) {
    auto& v = last_[static_cast<std::size_t>(i)];
    if (v < 0) touched_.push_back(i);
    v = t;
  }
  /// Indices with a visit at time >= t0, sorted.
  std::vector<std::int32_t> since(std::int64_t t0) const {
    std::vector<std::int32_t> out;
    for (auto i : touched_)
      if (last_[static_cast<std::size_t>(i)] >= t0) out.push_back(i);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::int64_t> last_;
  std::vector<std::int32_t> touched_;
};

/// One excursion set. `start` defaults to a harmonic-measure draw on dD_{2r}.
inline ExcursionSet sample_excursion_set(const ExcursionContext& ctx, std::uint64_t seed,
                                         std::int64_t run, SetKind kind, std::int64_t member = 0,
                                         std::optional<LatticePoint> start = std::nullopt) {
  auto s = member_streams(seed, run, family_of(kind), member);
  ExcursionSet out;
  out.r = ctx.r();
  out.kind = kind;
  out.start = start ? *start : ctx.sample_harmonic(s.start);
  VisitTimes vt(ctx.points().size());
  out.status = ctx.walk_to_outer(out.start, s.walk, s.far, [&](const LatticePoint& p, std::int64_t t) {
    const auto i = ctx.points().find(p);
    if (i >= 0) vt.visit(i, t);
  });
  out.covered = vt.since(0);
  return out;
}

/// One excursion set started from a draw of `start_law` (supported on dD_{2r}).
inline ExcursionSet sample_excursion_set(const ExcursionContext& ctx,
                                         const BoundaryDistribution& start_law,
                                         std::uint64_t seed, std::int64_t run, SetKind kind,
                                         std::int64_t member = 0) {
  auto s = member_streams(seed, run, family_of(kind), member);
  const auto cdf = ExcursionContext::cumulative(start_law);
  if (cdf.empty() || !(cdf.back() > 0.0)) throw std::invalid_argument("empty start law");
  return sample_excursion_set(ctx, seed, run, kind, member,
                              ExcursionContext::sample_from(start_law, cdf, s.start));
}

struct UnionResult {
  bool covered = false;
  std::int64_t uncovered = 0;
  RunStatus status = RunStatus::ok;
};

/// Union of k + 1 i.i.d. excursion sets.
inline UnionResult run_union_process(const ExcursionContext& ctx, std::int64_t k, SetKind kind,
                                     std::uint64_t seed, std::int64_t run) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  std::vector<std::uint8_t> hit(ctx.points().size(), 0);
  std::int64_t left = static_cast<std::int64_t>(hit.size());
  UnionResult out;
  for (std::int64_t j = 0; j <= k; ++j) {
    auto s = member_streams(seed, run, family_of(kind), j);
    const LatticePoint x = ctx.sample_harmonic(s.start);
    const auto st = ctx.walk_to_outer(x, s.walk, s.far, [&](const LatticePoint& p, std::int64_t) {
      const auto i = ctx.points().find(p);
      if (i >= 0 && !hit[static_cast<std::size_t>(i)]) {
        hit[static_cast<std::size_t>(i)] = 1;
        --left;
      }
    });
    if (st != RunStatus::ok) out.status = st;
  }
  out.uncovered = left;
  out.covered = left == 0;
  return out;
}

/// Points of D_r visited by a walk from the origin before dD_{wp(r)}; this
/// is the law the E-mechanism must reproduce for A(0).
inline std::vector<std::int32_t> initial_excursion_set(const ExcursionContext& ctx,
                                                       std::uint64_t seed, std::int64_t run) {
  auto s = member_streams(seed, run, substream::family_direct, 0);
  VisitTimes vt(ctx.points().size());
  ctx.walk_to_outer({0, 0}, s.walk, s.far, [&](const LatticePoint& p, std::int64_t t) {
    const auto i = ctx.points().find(p);
    if (i >= 0) vt.visit(i, t);
  });
  return vt.since(0);
}

/// One draw from the surrogate for nu: the dD_{2r} hitting point of the
/// walk started at the axis point of dD_{wp(r)}.
inline LatticePoint sample_nu_surrogate(const ExcursionContext& ctx, std::uint64_t seed,
                                        std::int64_t run, std::int64_t member, RunStatus& status) {
  auto s = member_streams(seed, run, substream::family_nu, member);
  return ctx.walk_to_inner(ctx.worst_start(), s.walk, s.far, status);
}

struct CouplingOptions {
  double c1 = 1.0;
  double u = 1.0;                  // number of xi draws = floor(u phi_r)
  bool force_zero_xi = false;
  std::int64_t max_sets = 100000;  // per mechanism
};

struct CouplingTrace {
  double r = 0.0;
  double alpha = 0.0;                     // c1/(log r)^2
  std::vector<std::uint8_t> xi;
  std::int64_t xi_sum = 0;
  std::vector<std::int64_t> discrepancies;  // 0 and, if present, i_p
  std::int64_t m_e = 0;
  std::optional<std::int64_t> m_f;
  std::optional<LatticePoint> nu_start;
  double a_threshold = 0.0;
  bool m_e_within_a = false;
  std::optional<bool> m_f_within_a;
  bool a0_contained = false;               // A(0) subset of E(m^E)
  bool censored = false;                   // max_sets reached
  std::vector<std::int32_t> a0;            // A(0)
  std::vector<std::int32_t> a_ip;          // A(i_p) when present
  RunStatus status = RunStatus::ok;
};

/// The coupled construction for one run.
inline CouplingTrace coupled_cover_run(const ExcursionContext& ctx, std::uint64_t seed,
                                       std::int64_t run, const CouplingOptions& opt) {
  CouplingTrace tr;
  const double r = ctx.r();
  const double lr = std::log(r);
  tr.r = r;
  tr.alpha = std::min(1.0, opt.c1 / (lr * lr));
  tr.a_threshold = a_threshold(r);

  const auto m = static_cast<std::int64_t>(std::floor(opt.u * phi(r)));
  Stream xi_rng = member_streams(seed, run, substream::family_xi, 0).walk;
  std::optional<std::int64_t> ip;
  for (std::int64_t i = 1; i <= m; ++i) {
    const bool one = !opt.force_zero_xi && xi_rng.bernoulli(tr.alpha);
    tr.xi.push_back(one ? 1 : 0);
    tr.xi_sum += one;
    if (one && !ip) ip = i;
  }

  // A(0): the first E-set that visits the origin, from its first visit on.
  VisitTimes vt(ctx.points().size());
  for (std::int64_t j = 1;; ++j) {
    if (j > opt.max_sets) { tr.censored = true; break; }
    auto s = member_streams(seed, run, substream::family_e, j);
    const LatticePoint x = ctx.sample_harmonic(s.start);
    vt.reset();
    std::int64_t t_origin = -1;
    const auto st = ctx.walk_to_outer(x, s.walk, s.far, [&](const LatticePoint& p, std::int64_t t) {
      const auto i = ctx.points().find(p);
      if (i < 0) return;
      vt.visit(i, t);
      if (i == ctx.origin_index() && t_origin < 0) t_origin = t;
    });
    if (st != RunStatus::ok) tr.status = st;
    if (t_origin >= 0) {
      tr.m_e = j;
      tr.a0 = vt.since(t_origin);
      const auto e_set = vt.since(0);
      tr.a0_contained = std::includes(e_set.begin(), e_set.end(), tr.a0.begin(), tr.a0.end());
      break;
    }
  }
  tr.discrepancies.push_back(0);
  tr.m_e_within_a = !tr.censored && static_cast<double>(tr.m_e) <= tr.a_threshold;

  if (ip) {
    tr.discrepancies.push_back(*ip);
    RunStatus st = RunStatus::ok;
    const LatticePoint target = sample_nu_surrogate(ctx, seed, run, 0, st);
    if (st != RunStatus::ok) tr.status = st;
    tr.nu_start = target;
    for (std::int64_t j = 1;; ++j) {
      if (j > opt.max_sets) { tr.censored = true; break; }
      auto s = member_streams(seed, run, substream::family_f, j);
      const LatticePoint x = ctx.sample_harmonic(s.start);
      vt.reset();
      std::int64_t t_hit = -1;
      const auto st2 = ctx.walk_to_outer(x, s.walk, s.far, [&](const LatticePoint& p, std::int64_t t) {
        if (t_hit < 0 && p == target) t_hit = t;
        const auto i = ctx.points().find(p);
        if (i >= 0) vt.visit(i, t);
      });
      if (st2 != RunStatus::ok) tr.status = st2;
      if (t_hit >= 0) {
        tr.m_f = j;
        tr.a_ip = vt.since(t_hit);
        break;
      }
    }
    if (tr.m_f) tr.m_f_within_a = static_cast<double>(*tr.m_f) <= tr.a_threshold;
  }
  return tr;
}

}  // namespace covlab
