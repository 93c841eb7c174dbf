#pragma once

// Exact discrete potential theory on finite regions of Z^2.
//
// Every problem reduces to L u = b with L = 4I - (adjacency) restricted to a
// set of interior nodes on a square grid. L is SPD; it is solved by
// conjugate gradients preconditioned with a symmetric geometric multigrid
// V-cycle (red-black Gauss-Seidel, bilinear prolongation, full-weighting
// restriction, rediscretised coarse operators). Sweep orders are fixed, so
// results are bit-reproducible on a given platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covlab/lattice.hpp"
#include "covlab/scales.hpp"
#include "covlab/stats.hpp"

namespace covlab {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;  // ||b - L x|| / ||b||
  double mean_value_residual = 0.0;  // max |u(z) - avg of neighbours|
  std::int64_t unknowns = 0;
};

/// Square grid [-half, half]^2 with half a power of two, so that every level
/// of the multigrid hierarchy nests exactly.
class SquareGrid {
 public:
  explicit SquareGrid(std::int64_t min_half) {
    half_ = 2;
    while (half_ < min_half) half_ *= 2;
    side_ = 2 * half_ + 1;
  }
  std::int64_t half() const { return half_; }
  std::int64_t side() const { return side_; }
  std::size_t cells() const { return static_cast<std::size_t>(side_ * side_); }
  std::size_t index(std::int64_t x, std::int64_t y) const {
    return static_cast<std::size_t>((y + half_) * side_ + (x + half_));
  }
  std::size_t index(const LatticePoint& p) const { return index(p.x, p.y); }
  bool contains(const LatticePoint& p) const {
    return std::abs(p.x) <= half_ && std::abs(p.y) <= half_;
  }
  LatticePoint point(std::size_t idx) const {
    const auto i = static_cast<std::int64_t>(idx);
    return {i % side_ - half_, i / side_ - half_};
  }

 private:
  std::int64_t half_;
  std::int64_t side_;
};

namespace detail {

struct MgLevel {
  std::int64_t n = 0;  // side length
  std::vector<std::uint8_t> mask;
  std::vector<double> x, b, r;
};

inline void smooth(MgLevel& L, int color) {
  const std::int64_t n = L.n;
  double* x = L.x.data();
  const double* b = L.b.data();
  const std::uint8_t* m = L.mask.data();
  for (std::int64_t j = 1; j < n - 1; ++j) {
    const std::int64_t row = j * n;
    for (std::int64_t i = 1 + ((j + 1 + color) & 1); i < n - 1; i += 2) {
      const std::int64_t k = row + i;
      if (m[k]) x[k] = 0.25 * (b[k] + x[k - 1] + x[k + 1] + x[k - n] + x[k + n]);
    }
  }
}

inline void apply_operator(std::int64_t n, const std::vector<std::uint8_t>& mask,
                           const std::vector<double>& x, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::int64_t j = 1; j < n - 1; ++j)
    for (std::int64_t i = 1; i < n - 1; ++i) {
      const std::int64_t k = j * n + i;
      if (mask[k]) out[k] = 4.0 * x[k] - x[k - 1] - x[k + 1] - x[k - n] - x[k + n];
    }
}

class Multigrid {
 public:
  Multigrid(std::int64_t n, const std::vector<std::uint8_t>& mask) {
    MgLevel top;
    top.n = n;
    top.mask = mask;
    levels_.push_back(std::move(top));
    while (levels_.back().n > 9) {
      const MgLevel& f = levels_.back();
      MgLevel c;
      c.n = (f.n - 1) / 2 + 1;
      c.mask.assign(static_cast<std::size_t>(c.n * c.n), 0);
      std::int64_t count = 0;
      for (std::int64_t J = 0; J < c.n; ++J)
        for (std::int64_t I = 0; I < c.n; ++I) {
          const auto v = f.mask[static_cast<std::size_t>(2 * J * f.n + 2 * I)];
          c.mask[static_cast<std::size_t>(J * c.n + I)] = v;
          count += v;
        }
      if (count == 0) break;
      levels_.push_back(std::move(c));
    }
    for (auto& L : levels_) {
      const auto sz = static_cast<std::size_t>(L.n * L.n);
      L.x.assign(sz, 0.0);
      L.b.assign(sz, 0.0);
      L.r.assign(sz, 0.0);
    }
  }

  /// z = M^{-1} r for the symmetric V-cycle preconditioner M.
  void apply(const std::vector<double>& r, std::vector<double>& z) {
    levels_[0].b = r;
    vcycle(0);
    z = levels_[0].x;
  }

 private:
  void vcycle(std::size_t l) {
    MgLevel& L = levels_[l];
    std::fill(L.x.begin(), L.x.end(), 0.0);
    if (l + 1 == levels_.size()) {
      for (int s = 0; s < 30; ++s) { smooth(L, 0); smooth(L, 1); }
      for (int s = 0; s < 30; ++s) { smooth(L, 1); smooth(L, 0); }
      return;
    }
    smooth(L, 0);
    smooth(L, 1);
    apply_operator(L.n, L.mask, L.x, L.r);
    for (std::size_t k = 0; k < L.r.size(); ++k) L.r[k] = L.mask[k] ? L.b[k] - L.r[k] : 0.0;

    MgLevel& C = levels_[l + 1];
    const std::int64_t n = L.n;
    // Coarse rhs: 4 * (full weighting of r), i.e. (1/4) sum w r with
    // weights 4 (centre), 2 (edges), 1 (corners).
    for (std::int64_t J = 0; J < C.n; ++J)
      for (std::int64_t I = 0; I < C.n; ++I) {
        const auto kc = static_cast<std::size_t>(J * C.n + I);
        if (!C.mask[kc]) { C.b[kc] = 0.0; continue; }
        const std::int64_t k = 2 * J * n + 2 * I;
        const double* r = L.r.data();
        const double s = 4.0 * r[k] + 2.0 * (r[k - 1] + r[k + 1] + r[k - n] + r[k + n]) +
                         (r[k - n - 1] + r[k - n + 1] + r[k + n - 1] + r[k + n + 1]);
        C.b[kc] = 0.25 * s;
      }
    vcycle(l + 1);
    const double* xc = C.x.data();
    const std::int64_t nc = C.n;
    for (std::int64_t j = 1; j < n - 1; ++j)
      for (std::int64_t i = 1; i < n - 1; ++i) {
        const std::int64_t k = j * n + i;
        if (!L.mask[k]) continue;
        const std::int64_t I = i / 2, J = j / 2;
        double v;
        if ((i & 1) == 0 && (j & 1) == 0) {
          v = xc[J * nc + I];
        } else if ((j & 1) == 0) {
          v = 0.5 * (xc[J * nc + I] + xc[J * nc + I + 1]);
        } else if ((i & 1) == 0) {
          v = 0.5 * (xc[J * nc + I] + xc[(J + 1) * nc + I]);
        } else {
          v = 0.25 * (xc[J * nc + I] + xc[J * nc + I + 1] + xc[(J + 1) * nc + I] +
                      xc[(J + 1) * nc + I + 1]);
        }
        L.x[k] += v;
      }
    smooth(L, 1);
    smooth(L, 0);
  }

  std::vector<MgLevel> levels_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Solves L x = b on the masked nodes of `grid` (x = 0 elsewhere).
inline SolveStats solve_masked(const SquareGrid& grid, const std::vector<std::uint8_t>& mask,
                               const std::vector<double>& b, std::vector<double>& x,
                               double rtol = 1e-12, int max_iter = 1000) {
  const std::int64_t n = grid.side();
  SolveStats st;
  for (auto m : mask) st.unknowns += m;
  x.assign(grid.cells(), 0.0);
  const double bnorm = std::sqrt(detail::dot(b, b));
  if (bnorm == 0.0) return st;

  detail::Multigrid mg(n, mask);
  std::vector<double> r = b, z, p, ap(grid.cells());
  mg.apply(r, z);
  p = z;
  double rz = detail::dot(r, z);
  double rnorm = bnorm;
  int it = 0;
  while (it < max_iter) {
    detail::apply_operator(n, mask, p, ap);
    const double alpha = rz / detail::dot(p, ap);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    ++it;
    rnorm = std::sqrt(detail::dot(r, r));
    if (rnorm <= rtol * bnorm) break;
    mg.apply(r, z);
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = z[k] + beta * p[k];
  }
  // Report the true residual, not the recursively updated one.
  detail::apply_operator(n, mask, x, ap);
  double rr = 0.0;
  for (std::size_t k = 0; k < ap.size(); ++k)
    if (mask[k]) rr += (b[k] - ap[k]) * (b[k] - ap[k]);
  st.iterations = it;
  st.relative_residual = std::sqrt(rr) / bnorm;
  if (!(st.relative_residual <= 1e3 * rtol))
    throw SolverError("multigrid-CG failed to converge (relative residual " +
                      std::to_string(st.relative_residual) + ")");
  return st;
}

/// Dirichlet problem: u harmonic on `mask`, u = `values` off the mask.
/// On return `values` holds u everywhere.
inline SolveStats solve_dirichlet(const SquareGrid& grid, const std::vector<std::uint8_t>& mask,
                                  std::vector<double>& values) {
  const std::int64_t n = grid.side();
  std::vector<double> b(grid.cells(), 0.0);
  for (std::int64_t j = 1; j < n - 1; ++j)
    for (std::int64_t i = 1; i < n - 1; ++i) {
      const std::int64_t k = j * n + i;
      if (!mask[k]) continue;
      double s = 0.0;
      for (std::int64_t nb : {k - 1, k + 1, k - n, k + n})
        if (!mask[nb]) s += values[nb];
      b[k] = s;
    }
  std::vector<double> x;
  SolveStats st = solve_masked(grid, mask, b, x);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (mask[k]) values[k] = x[k];
  for (std::int64_t j = 1; j < n - 1; ++j)
    for (std::int64_t i = 1; i < n - 1; ++i) {
      const std::int64_t k = j * n + i;
      if (!mask[k]) continue;
      const double avg = 0.25 * (values[k - 1] + values[k + 1] + values[k - n] + values[k + n]);
      worst = std::max(worst, std::abs(values[k] - avg));
    }
  st.mean_value_residual = worst;
  return st;
}

/// Green's function of the walk killed off the mask: G(z) = expected number
/// of visits to z starting from `source`. Solves G - avg(G) = delta.
inline SolveStats solve_green(const SquareGrid& grid, const std::vector<std::uint8_t>& mask,
                              const LatticePoint& source, std::vector<double>& green) {
  std::vector<double> b(grid.cells(), 0.0);
  b[grid.index(source)] = 4.0;
  SolveStats st = solve_masked(grid, mask, b, green);
  const std::int64_t n = grid.side();
  double worst = 0.0;
  for (std::int64_t j = 1; j < n - 1; ++j)
    for (std::int64_t i = 1; i < n - 1; ++i) {
      const std::int64_t k = j * n + i;
      if (!mask[k]) continue;
      const double avg = 0.25 * (green[k - 1] + green[k + 1] + green[k - n] + green[k + n]);
      const double src = (static_cast<std::size_t>(k) == grid.index(source)) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(green[k] - avg - src));
    }
  st.mean_value_residual = worst;
  return st;
}

// ---------------------------------------------------------------------------

struct BoundaryDistribution {
  std::vector<LatticePoint> support;
  std::vector<double> weights;

  double total() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  double weight_of(const LatticePoint& p) const {
    for (std::size_t i = 0; i < support.size(); ++i)
      if (support[i] == p) return weights[i];
    return 0.0;
  }
  /// Largest |w(g x) - w(x)| over the 8 lattice symmetries g.
  double asymmetry() const {
    PointIndex idx(support);
    double worst = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
      for (int g = 1; g < 8; ++g) {
        const auto j = idx.find(apply_symmetry(g, support[i]));
        const double other = j < 0 ? 0.0 : weights[static_cast<std::size_t>(j)];
        worst = std::max(worst, std::abs(other - weights[i]));
      }
    return worst;
  }
};

struct AbsorbingProblem {
  std::vector<LatticePoint> interior;
  std::vector<LatticePoint> absorbing;
  LatticePoint start;
};

struct SolverOptions {
  std::int64_t max_unknowns = 1'000'000;
};

struct HittingDistribution {
  BoundaryDistribution law;
  SolveStats stats;
};

/// Absorption law on `absorbing` of the walk started at `start`.
inline HittingDistribution exact_hitting_distribution(const AbsorbingProblem& pb,
                                                      const SolverOptions& opt = {}) {
  if (pb.absorbing.empty()) throw SolverError("empty absorbing set");
  if (static_cast<std::int64_t>(pb.interior.size()) > opt.max_unknowns)
    throw SolverError("interior exceeds size cap");
  HittingDistribution out;
  out.law.support = pb.absorbing;
  out.law.weights.assign(pb.absorbing.size(), 0.0);

  PointIndex abs_idx(pb.absorbing);
  const auto hit = abs_idx.find(pb.start);
  if (hit >= 0) {
    out.law.weights[static_cast<std::size_t>(hit)] = 1.0;
    return out;
  }
  std::int64_t w = 1;
  for (const auto& p : pb.interior) w = std::max({w, std::abs(p.x) + 1, std::abs(p.y) + 1});
  for (const auto& p : pb.absorbing) w = std::max({w, std::abs(p.x) + 1, std::abs(p.y) + 1});
  SquareGrid grid(w);
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  for (const auto& p : pb.interior) mask[grid.index(p)] = 1;
  // Well-formedness: interior neighbours are interior or absorbing.
  for (const auto& p : pb.interior)
    for (const auto& s : kSteps) {
      const LatticePoint q{p.x + s.x, p.y + s.y};
      if (!mask[grid.index(q)] && abs_idx.find(q) < 0)
        throw SolverError("interior point has a neighbour outside interior and absorbing set");
    }
  if (!mask[grid.index(pb.start)]) throw SolverError("start is neither interior nor absorbing");

  std::vector<double> g;
  out.stats = solve_green(grid, mask, pb.start, g);
  for (std::size_t a = 0; a < pb.absorbing.size(); ++a) {
    double s = 0.0;
    for (const auto& st : kSteps) {
      const LatticePoint q{pb.absorbing[a].x + st.x, pb.absorbing[a].y + st.y};
      if (grid.contains(q) && mask[grid.index(q)]) s += g[grid.index(q)];
    }
    out.law.weights[a] = 0.25 * s;
  }
  return out;
}

struct HitProb {
  double value = 0.0;
  double leading_term = 0.0;  // (log P - log r) / (log P - log rho)
  SolveStats stats;
  double deviation() const { return value - leading_term; }
};

/// P^start{ zeta(rho) < zeta(P) }: the walk reaches dD_rho before dD_P.
/// `start` may be anywhere in D_P outside D_rho (hitting uses n >= 0, so a
/// start on dD_rho gives 1).
inline HitProb exact_hit_prob(double rho, double r, double P, const LatticePoint& start,
                              const SolverOptions& opt = {}) {
  if (!(rho < r && r < P) || rho < 0.0) throw std::invalid_argument("need 0 <= rho < r < P");
  const Radius inner = Radius::from_real(rho), outer = Radius::from_real(P);
  HitProb out;
  out.leading_term = (std::log(P) - std::log(r)) / (std::log(P) - std::log(rho));
  if (on_boundary(start, inner)) { out.value = 1.0; return out; }
  if (on_boundary(start, outer)) { out.value = 0.0; return out; }
  if (!in_disk(start, outer) || in_disk(start, inner))
    throw std::invalid_argument("start must lie in D_P outside D_rho");
  SquareGrid grid(isqrt(outer.limit) + 2);
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  std::vector<double> u(grid.cells(), 0.0);
  std::int64_t count = 0;
  const std::int64_t h = isqrt(outer.limit) + 1;
  for (std::int64_t y = -h; y <= h; ++y)
    for (std::int64_t x = -h; x <= h; ++x) {
      const LatticePoint p{x, y};
      const auto k = grid.index(p);
      if (on_boundary(p, inner)) u[k] = 1.0;
      else if (in_disk(p, outer) && !in_disk(p, inner)) { mask[k] = 1; ++count; }
    }
  if (count > opt.max_unknowns) throw SolverError("annulus exceeds size cap");
  out.stats = solve_dirichlet(grid, mask, u);
  out.value = u[grid.index(start)];
  return out;
}

/// P^start{ walk visits the origin before dD_P }.
inline HitProb exact_origin_prob(double P, const LatticePoint& start,
                                 const SolverOptions& opt = {}) {
  const Radius outer = Radius::from_real(P);
  HitProb out;
  if (start == LatticePoint{0, 0}) { out.value = 1.0; return out; }
  if (on_boundary(start, outer)) { out.value = 0.0; return out; }
  if (!in_disk(start, outer)) throw std::invalid_argument("start must lie in D_P");
  SquareGrid grid(isqrt(outer.limit) + 2);
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  std::vector<double> u(grid.cells(), 0.0);
  std::int64_t count = 0;
  for (const auto& p : disk_points(outer))
    if (p != LatticePoint{0, 0}) { mask[grid.index(p)] = 1; ++count; }
  u[grid.index(LatticePoint{0, 0})] = 1.0;
  if (count > opt.max_unknowns) throw SolverError("disk exceeds size cap");
  out.stats = solve_dirichlet(grid, mask, u);
  out.value = u[grid.index(start)];
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic measure from infinity.

namespace detail {

/// Normalised escape probabilities P^x{reach dD_M before returning to
/// D_r u dD_r}, x in dD_r. Proportional to the dD_r hitting law of a walk
/// started from the equilibrium distribution on dD_M.
inline std::vector<double> escape_law(const Radius& r, const std::vector<LatticePoint>& bnd,
                                      double M, SolveStats& stats, std::int64_t cap) {
  const Radius outer = Radius::from_real(M);
  SquareGrid grid(isqrt(outer.limit) + 2);
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  std::vector<double> v(grid.cells(), 0.0);
  const std::int64_t h = isqrt(outer.limit) + 1;
  std::int64_t count = 0;
  for (std::int64_t y = -h; y <= h; ++y)
    for (std::int64_t x = -h; x <= h; ++x) {
      const LatticePoint p{x, y};
      const auto k = grid.index(p);
      if (on_boundary(p, outer)) v[k] = 1.0;
      else if (in_disk(p, outer) && !in_disk(p, r) && !on_boundary(p, r)) { mask[k] = 1; ++count; }
    }
  if (count > cap) throw SolverError("harmonic measure truncation exceeds size cap");
  stats = solve_dirichlet(grid, mask, v);
  std::vector<double> es(bnd.size(), 0.0);
  double tot = 0.0;
  for (std::size_t i = 0; i < bnd.size(); ++i) {
    double s = 0.0;
    for (const auto& st : kSteps) {
      const LatticePoint q{bnd[i].x + st.x, bnd[i].y + st.y};
      if (mask[grid.index(q)]) s += v[grid.index(q)];
    }
    es[i] = s;
    tot += s;
  }
  for (auto& e : es) e /= tot;
  return es;
}

/// Averages weights over the orbits of the 8 lattice symmetries.
inline void symmetrize(BoundaryDistribution& d) {
  PointIndex idx(d.support);
  std::vector<double> out(d.weights.size(), 0.0);
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    double s = 0.0;
    for (int g = 0; g < 8; ++g) {
      const auto j = idx.find(apply_symmetry(g, d.support[i]));
      s += d.weights[static_cast<std::size_t>(j)];
    }
    out[i] = s / 8.0;
  }
  d.weights = std::move(out);
}

}  // namespace detail

struct HarmonicMeasure {
  BoundaryDistribution law;                    // extrapolated
  std::vector<double> truncations;
  std::vector<std::vector<double>> per_truncation;
  std::vector<double> successive_tv;           // TV between consecutive truncations
  double max_pointwise_change = 0.0;           // between the two largest truncations
  bool converged = true;
  double max_mean_value_residual = 0.0;
};

/// Harmonic measure H_r on dD_r, from truncations at radii M (increasing,
/// smallest >= 8r), extrapolated linearly in 1/log M from the two largest.
inline HarmonicMeasure harmonic_measure(double r, const std::vector<double>& Ms,
                                        std::int64_t cap = 20'000'000) {
  if (Ms.size() < 2) throw std::invalid_argument("need at least two truncation radii");
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    if (Ms[i] < 8.0 * r) throw std::invalid_argument("truncation radius below 8r");
    if (i > 0 && !(Ms[i] > Ms[i - 1])) throw std::invalid_argument("truncations must increase");
  }
  const Radius rr = Radius::from_real(r);
  HarmonicMeasure out;
  out.law.support = boundary_points(rr);
  out.truncations = Ms;
  for (double M : Ms) {
    SolveStats st;
    out.per_truncation.push_back(detail::escape_law(rr, out.law.support, M, st, cap));
    out.max_mean_value_residual = std::max(out.max_mean_value_residual, st.mean_value_residual);
  }
  for (std::size_t i = 1; i < Ms.size(); ++i)
    out.successive_tv.push_back(total_variation(out.per_truncation[i - 1], out.per_truncation[i]));
  for (std::size_t i = 1; i < out.successive_tv.size(); ++i)
    if (out.successive_tv[i] > out.successive_tv[i - 1]) out.converged = false;

  const auto& a = out.per_truncation[Ms.size() - 2];
  const auto& b = out.per_truncation[Ms.size() - 1];
  const double ia = 1.0 / std::log(Ms[Ms.size() - 2]);
  const double ib = 1.0 / std::log(Ms.back());
  // Linear in s = 1/log M, evaluated at s = 0.
  const double slope_factor = ib / (ia - ib);
  out.law.weights.resize(b.size());
  double tot = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    out.max_pointwise_change = std::max(out.max_pointwise_change, std::abs(b[i] - a[i]));
    out.law.weights[i] = std::max(0.0, b[i] + (b[i] - a[i]) * slope_factor);
    tot += out.law.weights[i];
  }
  for (auto& w : out.law.weights) w /= tot;
  detail::symmetrize(out.law);
  return out;
}

/// Default truncation radii for H_r: 8r and 12r (at least 8 and 12). The
/// normalised escape law changes by well under 1e-6 in total variation
/// beyond 8r, so two nearby truncations suffice.
inline std::vector<double> default_truncations(double r) {
  const double base = std::max(8.0 * r, 8.0);
  return {base, 1.5 * base};
}

// ---------------------------------------------------------------------------

struct BiasedStart {
  double max_relative_deviation = 0.0;  // max_x |mu(x) - H(x)| / H(x)
  double c1 = 0.0;                      // deviation * (log r)^2
  double escaped_mass = 0.0;            // mass reaching the truncation circle
  double truncation = 0.0;
  BoundaryDistribution mu;
  BoundaryDistribution harmonic;
  SolveStats stats;
};

/// Hitting law on dD_{2r} of the walk started at `start` (on dD_{wp(r)}),
/// compared with H_{2r}. The walk is killed on dD_M with M ~ 1.5 wp(r) + 2;
/// mass that reaches dD_M is returned to dD_{2r} with law H(x) times the
/// exterior Poisson kernel of the circle through x seen from the exit point.
inline BiasedStart biased_start_deviation(double r, const LatticePoint& start,
                                          std::int64_t cap = 40'000'000) {
  if (r < 8.0) throw std::invalid_argument("biased_start_deviation needs r >= 8");
  const double P = wp(r);
  const double L = 2.0 * r;
  const Radius inner = Radius::from_real(L);
  if (!on_boundary(start, Radius::from_real(P)))
    throw std::invalid_argument("start must lie on dD_wp(r)");
  BiasedStart out;
  out.truncation = std::ceil(1.5 * P + 2.0);
  const Radius outer = Radius::from_real(out.truncation);

  out.harmonic = harmonic_measure(L, default_truncations(L), cap).law;
  const auto& bnd = out.harmonic.support;

  SquareGrid grid(isqrt(outer.limit) + 2);
  std::vector<std::uint8_t> mask(grid.cells(), 0);
  const std::int64_t h = isqrt(outer.limit) + 1;
  std::int64_t count = 0;
  std::vector<LatticePoint> exits;
  for (std::int64_t y = -h; y <= h; ++y)
    for (std::int64_t x = -h; x <= h; ++x) {
      const LatticePoint p{x, y};
      if (on_boundary(p, outer)) exits.push_back(p);
      else if (in_disk(p, outer) && !in_disk(p, inner) && !on_boundary(p, inner)) {
        mask[grid.index(p)] = 1;
        ++count;
      }
    }
  if (count > cap) throw SolverError("biased start problem exceeds size cap");
  std::vector<double> g;
  out.stats = solve_green(grid, mask, start, g);

  auto absorbed = [&](const LatticePoint& a) {
    double s = 0.0;
    for (const auto& st : kSteps) {
      const LatticePoint q{a.x + st.x, a.y + st.y};
      if (grid.contains(q) && mask[grid.index(q)]) s += g[grid.index(q)];
    }
    return 0.25 * s;
  };

  out.mu.support = bnd;
  out.mu.weights.assign(bnd.size(), 0.0);
  for (std::size_t i = 0; i < bnd.size(); ++i) out.mu.weights[i] = absorbed(bnd[i]);
  std::vector<double> kern(bnd.size());
  double escaped = 0.0;
  for (const auto& y : exits) {
    const double q = absorbed(y);
    if (q == 0.0) continue;
    escaped += q;
    const auto yy = static_cast<double>(y.norm2());
    double tot = 0.0;
    for (std::size_t i = 0; i < bnd.size(); ++i) {
      const double dx = static_cast<double>(y.x - bnd[i].x), dy = static_cast<double>(y.y - bnd[i].y);
      kern[i] = out.harmonic.weights[i] * (yy - static_cast<double>(bnd[i].norm2())) / (dx * dx + dy * dy);
      tot += kern[i];
    }
    for (std::size_t i = 0; i < bnd.size(); ++i) out.mu.weights[i] += q * kern[i] / tot;
  }
  out.escaped_mass = escaped;
  for (std::size_t i = 0; i < bnd.size(); ++i) {
    const double hx = out.harmonic.weights[i];
    if (hx > 0.0)
      out.max_relative_deviation =
          std::max(out.max_relative_deviation, std::abs(out.mu.weights[i] - hx) / hx);
  }
  const double lr = std::log(r);
  out.c1 = out.max_relative_deviation * lr * lr;
  return out;
}

/// Worst-case start used for the biased-start surrogate: the axis point of
/// dD_{wp(r)}.
inline LatticePoint axis_start(double radius_value) {
  const Radius R = Radius::from_real(radius_value);
  return {isqrt(R.limit) + 1, 0};
}

// ---------------------------------------------------------------------------

/// Versioned golden-value table: "# covlab-golden v1" then one record per
/// line, "key value residual".
class GoldenTable {
 public:
  static constexpr const char* kHeader = "# covlab-golden v1";

  static GoldenTable load(const std::string& path) {
    GoldenTable t;
    std::ifstream in(path);
    if (!in) return t;
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
      throw std::runtime_error("golden table " + path + ": bad or missing header");
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string key;
      Entry e;
      if (!(ss >> key >> e.value >> e.residual))
        throw std::runtime_error("golden table " + path + ": malformed record: " + line);
      t.entries_[key] = e;
    }
    return t;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    out << kHeader << '\n';
    out.precision(17);
    for (const auto& [k, e] : entries_) out << k << ' ' << e.value << ' ' << e.residual << '\n';
  }

  std::optional<double> get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }
  void put(const std::string& key, double value, double residual) {
    entries_[key] = Entry{value, residual};
  }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    double value = 0.0;
    double residual = 0.0;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace covlab
