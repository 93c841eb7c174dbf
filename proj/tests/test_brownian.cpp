#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "covlab/brownian.hpp"
#include "covlab/stats.hpp"

using namespace covlab;

namespace {

// P{tau > t} for planar Brownian motion from the centre of D(0, r):
// sum_k 2/(j_k J_1(j_k)) exp(-j_k^2 t / (2 r^2)), j_k the zeros of J_0.
double disk_survival(double r, double t) {
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double j = boost::math::cyl_bessel_j_zero(0.0, k);
    const double term = 2.0 / (j * boost::math::cyl_bessel_j(1, j)) * std::exp(-j * j * t / (2.0 * r * r));
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

TEST(AnnulusFormula, Examples) {
  EXPECT_NEAR(annulus_hit_prob_formula(2.0, 5.0, 50.0), std::log(10.0) / std::log(25.0), 1e-15);
  EXPECT_NEAR(annulus_hit_prob_formula(1.0, std::numbers::e, std::exp(2.0)), 0.5, 1e-15);
  EXPECT_THROW(annulus_hit_prob_formula(3.0, 2.0, 5.0), std::invalid_argument);
  EXPECT_THROW(annulus_hit_prob_formula(1.0, 5.0, 5.0), std::invalid_argument);
}

TEST(AnnulusSide, InnerFrequency) {
  Stream rng = Stream::for_run(1, 0, 0);
  int inner = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) inner += sample_annulus_side({std::numbers::e, 0.0}, 1.0, std::exp(2.0), 1e-6, rng).inner;
  EXPECT_NEAR(static_cast<double>(inner) / n, 0.5, 0.02);
}

TEST(AnnulusSide, Errors) {
  Stream rng = Stream::for_run(1, 0, 0);
  EXPECT_THROW(sample_annulus_side({3.0, 0.0}, 1.0, 5.0, 0.05, rng), std::invalid_argument);
  EXPECT_THROW(sample_annulus_side({0.5, 0.0}, 1.0, 5.0, 1e-6, rng), std::invalid_argument);
  EXPECT_THROW(sample_annulus_side({3.0, 0.0}, 5.0, 1.0, 1e-6, rng), std::invalid_argument);
}

TEST(AnnulusSide, ExitPointsAreOnTheCirclesAndRotationInvariant) {
  Stream rng = Stream::for_run(2, 0, 0);
  std::vector<double> u;
  for (int i = 0; i < 5000; ++i) {
    const auto ex = sample_annulus_side({0.0, 2.0}, 1.0, 4.0, 1e-6, rng);
    EXPECT_NEAR(ex.point.norm(), ex.inner ? 1.0 : 4.0, 1e-9);
    if (!ex.inner) continue;
    // Fold the angle about the start direction; the folded angle has a
    // continuous law, so test the sign symmetry instead.
    u.push_back(ex.point.x > 0.0 ? 1.0 : 0.0);
  }
  const auto m = moments(u);
  EXPECT_NEAR(m.mean, 0.5, 4.0 * m.std_error());
}

TEST(AnnulusSide, AgreesWithFineStepSimulation) {
  // Side frequencies from direct Gaussian stepping versus sphere stepping.
  const double r1 = 1.0, r3 = 4.0;
  const Vec2 start{2.0, 0.0};
  const int n = 4000;
  int wos_inner = 0, direct_inner = 0;
  Stream rng = Stream::for_run(3, 0, 0);
  for (int i = 0; i < n; ++i) wos_inner += sample_annulus_side(start, r1, r3, 1e-6, rng).inner;
  for (int i = 0; i < n; ++i) {
    const Stream base = Stream::for_run(4, static_cast<std::uint64_t>(i));
    GaussianStepper g(1e-4, 0, base.substream(1), base.substream(2));
    Vec2 z = start;
    int side = 0;
    while (side == 0)
      g.advance(z, [&](const Vec2& q) {
        const double n2 = q.x * q.x + q.y * q.y;
        side = n2 <= r1 * r1 ? 1 : (n2 >= r3 * r3 ? 2 : 0);
        return side != 0;
      });
    direct_inner += side == 1;
  }
  const Proportion a{wos_inner, n}, b{direct_inner, n};
  EXPECT_LT(std::abs(z_score(a.estimate(), a.std_error(), b.estimate(), b.std_error())), 3.0);
  EXPECT_NEAR(a.estimate(), annulus_hit_prob_formula(r1, start.norm(), r3), 3.0 * a.std_error());
}

TEST(GaussianPath, IncrementVariance) {
  const double dt = 0.01;
  const auto p = sample_path({0.0, 0.0}, dt, 100000, 6, 0);
  EXPECT_NEAR(p.elapsed(), 1000.0, 1e-9);
  std::vector<double> dx, dy;
  for (std::size_t i = 1; i < p.positions.size(); ++i) {
    dx.push_back(p.positions[i].x - p.positions[i - 1].x);
    dy.push_back(p.positions[i].y - p.positions[i - 1].y);
  }
  const double se = dt * std::sqrt(2.0 / static_cast<double>(dx.size()));
  EXPECT_NEAR(moments(dx).variance, dt, 3.0 * se);
  EXPECT_NEAR(moments(dy).variance, dt, 3.0 * se);
}

TEST(GaussianPath, RefinementExtendsCoarsePath) {
  // The refined path hits the same base-step endpoints.
  const Stream base = Stream::for_run(7, 0);
  GaussianStepper coarse(0.1, 0, base.substream(1), base.substream(2));
  GaussianStepper fine(0.1, 3, base.substream(1), base.substream(2));
  Vec2 a, b;
  std::size_t count = 0;
  for (int i = 0; i < 100; ++i) {
    coarse.advance(a, [](const Vec2&) { return false; });
    fine.advance(b, [&](const Vec2&) { ++count; return false; });
    EXPECT_DOUBLE_EQ(a.x, b.x);
    EXPECT_DOUBLE_EQ(a.y, b.y);
  }
  EXPECT_EQ(count, 800u);
  EXPECT_DOUBLE_EQ(fine.sub_dt(), 0.0125);
  EXPECT_THROW(GaussianStepper(0.0, 0, base, base), std::invalid_argument);
}

TEST(GaussianPath, ExitAnglesAreUniform) {
  std::vector<double> u;
  for (int i = 0; i < 2000; ++i) {
    const Stream base = Stream::for_run(8, static_cast<std::uint64_t>(i));
    GaussianStepper g(1e-4, 0, base.substream(1), base.substream(2));
    Vec2 z;
    bool out = false;
    while (!out) g.advance(z, [&](const Vec2& q) { return out = q.x * q.x + q.y * q.y >= 1.0; });
    u.push_back((std::atan2(z.y, z.x) + std::numbers::pi) / (2.0 * std::numbers::pi));
  }
  EXPECT_GT(ks_uniform(u).p_value, 0.01);
}

TEST(BrownianExit, MeanAtUnitRadius) {
  const auto s = brownian_exit_stats(1.0, 2000, 9, 1e-5);
  // Discrete monitoring overshoots by O(sqrt(dt)) in space.
  EXPECT_NEAR(s.time.mean, 0.5, 3.0 * s.time.std_error() + 0.01);
  EXPECT_THROW(brownian_exit_stats(0.5, 10, 1), std::invalid_argument);
}

TEST(BrownianExit, MeanAtRadiusTenAndHalvedStep) {
  const auto a = brownian_exit_stats(10.0, 2000, 10, 1e-3);
  EXPECT_NEAR(a.time.mean, 50.0, 3.0 * a.time.std_error());
  // Same driving noise, dt halved by one bridge refinement.
  const auto b = brownian_exit_stats(10.0, 2000, 10, 1e-3, 1);
  EXPECT_LT(std::abs(b.time.mean - a.time.mean) / a.time.mean, 0.01);
}

TEST(BrownianExit, SurvivalMatchesBesselSeries) {
  EXPECT_NEAR(disk_survival(1.0, 0.05), 1.0, 1e-3);
  const double r = 5.0;
  const auto s = brownian_exit_stats(r, 4000, 11, 2e-3);
  for (double t : {3.0, 8.0, 12.5, 25.0, 40.0}) {
    double above = 0.0;
    for (double x : s.samples) above += x > t;
    const double p = disk_survival(r, t);
    const double n = static_cast<double>(s.samples.size());
    // Discrete monitoring delays exits slightly; allow 0.01 on top of 4 sigma.
    EXPECT_NEAR(above / n, p, 4.0 * std::sqrt(p * (1.0 - p) / n) + 0.01) << "t = " << t;
  }
}

TEST(BrownianExit, TailWindowAtRadiusThirty) {
  // The mass of the exit time outside (r^1.75, r^2.25) at r = 30 from the
  // series is about 0.54: E tau = r^2/2 = 450 lies just above r^1.75 = 384.
  const double r = 30.0;
  const double lo = std::pow(r, 1.75), hi = std::pow(r, 2.25);
  const double tail = 1.0 - disk_survival(r, lo) + disk_survival(r, hi);
  const auto s = brownian_exit_stats(r, 1000, 12, 0.05, 0, 0.25);
  const double se = std::sqrt(tail * (1.0 - tail) / 1000.0);
  EXPECT_NEAR(s.tail_fraction, tail, 4.0 * se + 0.005);
}

TEST(SausageGrid, CellsAndMarking) {
  SausageGrid g(2.0, 0.5);
  // Cells with centre (i/2, j/2), i^2 + j^2 <= 16.
  std::int64_t count = 0;
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) count += i * i + j * j <= 16;
  EXPECT_EQ(g.total(), count);
  g.mark_disk({0.0, 0.0}, 1.0);
  EXPECT_EQ(g.total() - g.uncovered(), 13);
  g.mark_disk({0.0, 0.0}, 3.0);
  EXPECT_TRUE(g.covered());
}

TEST(Sausage, BasicRunProperties) {
  SausageOptions o;
  o.keep_ledger = true;
  for (int run = 0; run < 5; ++run) {
    const auto res = sausage_cover_run(12.0, 3, run, o);
    ASSERT_EQ(res.status, RunStatus::ok);
    EXPECT_GT(res.cover_time, 12.0);
    EXPECT_TRUE(res.ledger_alternates);
    EXPECT_EQ(res.monotonicity_violations, 0);
    EXPECT_FALSE(res.time_exact);
  }
}

TEST(Sausage, PreconditionsAreChecked) {
  SausageOptions o;
  EXPECT_THROW(sausage_cover_run(4.0, 1, 0, o), std::invalid_argument);
  o.dt = 0.02;
  EXPECT_THROW(sausage_cover_run(12.0, 1, 0, o), std::invalid_argument);
  o = {};
  o.h = 0.3;
  EXPECT_THROW(sausage_cover_run(12.0, 1, 0, o), std::invalid_argument);
  o = {};
  o.R = 0.01;
  EXPECT_THROW(sausage_cover_run(12.0, 1, 0, o), std::invalid_argument);
}

TEST(Sausage, HalvingStepRarelyMovesExcursionCount) {
  SausageOptions a, b;
  b.refine = 1;
  int close = 0;
  for (int run = 0; run < 50; ++run) {
    const auto x = sausage_cover_run(12.0, 4, run, a);
    const auto y = sausage_cover_run(12.0, 4, run, b);
    close += std::abs(x.excursions - y.excursions) <= 1;
  }
  EXPECT_GE(close, 45);
}

TEST(Sausage, BrownianScalingTransfer) {
  // Space x2 and time x4: r=10, s=1 versus r=20, s=2 on the same noise.
  SausageOptions small, big;
  small.h = 0.1; small.dt = 0.0025; small.sausage_radius = 1.0; small.near_margin = 1.0;
  small.inner = 20.0; small.outer = 60.0; small.wos_tol = 1e-6;
  big.h = 0.2; big.dt = 0.01; big.sausage_radius = 2.0; big.near_margin = 2.0;
  big.inner = 40.0; big.outer = 120.0; big.wos_tol = 2e-6;
  std::vector<double> ns, nb;
  int same = 0;
  for (int run = 0; run < 20; ++run) {
    const auto x = sausage_cover_run(10.0, 5, run, small);
    const auto y = sausage_cover_run(20.0, 5, run, big);
    ns.push_back(static_cast<double>(x.excursions));
    nb.push_back(static_cast<double>(y.excursions));
    same += x.excursions == y.excursions;
  }
  const auto ms = moments(ns), mb = moments(nb);
  const double se = std::hypot(ms.std_error(), mb.std_error());
  EXPECT_LE(std::abs(ms.mean - mb.mean), 3.0 * se + 1e-12);
  EXPECT_GE(same, 18);
}

TEST(Torus, Preconditions) {
  EXPECT_THROW(torus_cover_time(0.1, 1, 0), std::invalid_argument);
  TorusOptions o;
  o.dt = 1.0;
  EXPECT_THROW(torus_cover_time(0.05, 1, 0, o), std::invalid_argument);
  o = {};
  o.grid_per_axis = 10;
  EXPECT_THROW(torus_cover_time(0.05, 1, 0, o), std::invalid_argument);
}

TEST(Torus, CoverTimeGrowsAsEpsilonShrinks) {
  // Nested targets and the same noise: the eps = 0.02 target set contains
  // the eps = 0.04 one and every ball shrinks.
  TorusOptions o;
  o.dt = 0.02 * 0.02 / 25.0;
  for (int run = 0; run < 3; ++run) {
    const auto coarse = torus_cover_time(0.04, 6, run, o);
    const auto fine = torus_cover_time(0.02, 6, run, o);
    ASSERT_EQ(fine.status, RunStatus::ok);
    EXPECT_LE(coarse.cover_time, fine.cover_time);
    EXPECT_EQ(coarse.targets, 100 * 100);
    EXPECT_EQ(fine.targets, 200 * 200);
  }
}
