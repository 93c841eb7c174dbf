#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numbers>

#include "covlab/coupling.hpp"
#include "covlab/stats.hpp"

using namespace covlab;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

// Shared per-radius contexts; building one solves for H_{2r}.
const ExcursionContext& context(double r) {
  static std::map<double, std::unique_ptr<ExcursionContext>> cache;
  auto& slot = cache[r];
  if (!slot) slot = std::make_unique<ExcursionContext>(r);
  return *slot;
}

}  // namespace

TEST(XiTail, SmallCases) {
  EXPECT_DOUBLE_EQ(xi_tail_prob(0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(xi_tail_prob(1, 0.3), 0.0);
  EXPECT_NEAR(xi_tail_prob(2, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(xi_tail_prob(3, 0.5), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(xi_tail_prob(5, 1.0), 1.0);
  EXPECT_THROW(xi_tail_prob(-1, 0.1), std::invalid_argument);
  EXPECT_THROW(xi_tail_prob(3, 1.5), std::invalid_argument);
}

TEST(XiTail, MatchesBinomialSum) {
  for (std::int64_t m : {2, 10, 57, 400}) {
    for (double alpha : {1e-6, 0.01, 0.2, 0.9}) {
      Big below = 0;
      for (int k = 0; k <= 1; ++k) {
        Big c = k == 0 ? Big(1) : Big(m);
        below += c * pow(Big(alpha), k) * pow(1 - Big(alpha), m - k);
      }
      const double oracle = (1 - below).convert_to<double>();
      EXPECT_NEAR(xi_tail_prob(m, alpha), oracle, 1e-13 * std::max(1.0, oracle) + 1e-15 * m)
          << m << " " << alpha;
    }
  }
}

TEST(AThreshold, TowerOfE) {
  const double r = std::exp(std::exp(std::numbers::e));
  EXPECT_NEAR(a_threshold(r), 64.0 * std::exp(std::numbers::e - 1.0), 1e-9);
  EXPECT_NEAR(a_threshold(r), 356.79, 0.01);
}

TEST(AThreshold, AgainstMultiprecision) {
  const Big l = log(Big(1e6));
  const Big oracle = 64 * l * log(log(l)) / log(l);
  EXPECT_NEAR(a_threshold(1e6), oracle.convert_to<double>(), 1e-10);
  EXPECT_THROW(a_threshold(15.0), DomainError);
}

TEST(ExcursionSet, StartsOnInnerCircleAndStaysInDisk) {
  const auto& ctx = context(16.0);
  const Radius inner = Radius::from_real(32.0);
  for (int run = 0; run < 200; ++run) {
    const auto s = sample_excursion_set(ctx, 3, run, SetKind::C);
    ASSERT_EQ(s.status, RunStatus::ok);
    EXPECT_TRUE(on_boundary(s.start, inner));
    EXPECT_TRUE(std::is_sorted(s.covered.begin(), s.covered.end()));
    for (auto i : s.covered) ASSERT_TRUE(ctx.in_disk(ctx.points()[static_cast<std::size_t>(i)]));
  }
}

TEST(ExcursionSet, HarmonicStartFrequencies) {
  const auto& ctx = context(16.0);
  const auto& h = ctx.harmonic();
  std::vector<std::int64_t> counts(h.support.size(), 0);
  Stream rng = Stream::for_run(8, 0, 0);
  for (int i = 0; i < 50000; ++i) ++counts[static_cast<std::size_t>(ctx.boundary_index().find(ctx.sample_harmonic(rng)))];
  EXPECT_GT(chi_square_fit(counts, h.weights).p_value, 1e-4);
}

TEST(ExcursionSet, ExplicitStartLawIsRespected) {
  const auto& ctx = context(16.0);
  BoundaryDistribution point;
  point.support = {axis_boundary_point(32.0)};
  point.weights = {1.0};
  const auto s = sample_excursion_set(ctx, point, 4, 0, SetKind::biased);
  EXPECT_EQ(s.start, axis_boundary_point(32.0));
  EXPECT_THROW(sample_excursion_set(ctx, BoundaryDistribution{}, 4, 0, SetKind::biased),
               std::invalid_argument);
}

TEST(ExcursionSet, OriginFrequencyMeetsBound) {
  const double r = 30.0;
  const auto& ctx = context(r);
  const int n = 3000;
  int hits = 0;
  for (int run = 0; run < n; ++run) {
    const auto s = sample_excursion_set(ctx, 5, run, SetKind::C);
    hits += std::binary_search(s.covered.begin(), s.covered.end(), ctx.origin_index());
  }
  const Proportion p{hits, n};
  const double bound = (std::log(wp(r)) - std::log(2.0 * r)) / (16.0 * std::log(wp(r)));
  EXPECT_GE(p.estimate(), bound - 3.0 * p.std_error());
}

TEST(UnionProcess, SingleSetNeverCovers) {
  const auto& ctx = context(40.0);
  for (int run = 0; run < 20; ++run) {
    const auto u = run_union_process(ctx, 0, SetKind::C, 6, run);
    EXPECT_FALSE(u.covered);
    EXPECT_GT(u.uncovered, 0);
  }
  EXPECT_THROW(run_union_process(ctx, -1, SetKind::C, 6, 0), std::invalid_argument);
}

TEST(UnionProcess, UncoveredCountDecreasesWithK) {
  const auto& ctx = context(16.0);
  for (int run = 0; run < 10; ++run) {
    // Members are indexed by j, so the k-union contains the (k-1)-union.
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t k : {0, 2, 5, 10}) {
      const auto u = run_union_process(ctx, k, SetKind::E, 7, run);
      EXPECT_LE(u.uncovered, prev);
      prev = u.uncovered;
    }
  }
}

TEST(Coupling, ReplayAndContainment) {
  const auto& ctx = context(16.0);
  CouplingOptions opt;
  opt.c1 = 1.6;
  for (int run = 0; run < 30; ++run) {
    const auto a = coupled_cover_run(ctx, 9, run, opt);
    const auto b = coupled_cover_run(ctx, 9, run, opt);
    EXPECT_EQ(a.xi, b.xi);
    EXPECT_EQ(a.m_e, b.m_e);
    EXPECT_EQ(a.a0, b.a0);
    EXPECT_EQ(a.m_f, b.m_f);
    EXPECT_TRUE(a.a0_contained);
    EXPECT_TRUE(std::binary_search(a.a0.begin(), a.a0.end(), ctx.origin_index()));
    EXPECT_EQ(a.discrepancies.front(), 0);
    EXPECT_EQ(a.discrepancies.size(), a.xi_sum > 0 ? 2u : 1u);
    EXPECT_EQ(static_cast<std::int64_t>(a.xi.size()), static_cast<std::int64_t>(std::floor(phi(16.0))));
  }
}

TEST(Coupling, ForcedZeroXiHasNoLaterDiscrepancy) {
  const auto& ctx = context(16.0);
  CouplingOptions opt;
  opt.c1 = 50.0;
  opt.force_zero_xi = true;
  for (int run = 0; run < 20; ++run) {
    const auto t = coupled_cover_run(ctx, 10, run, opt);
    EXPECT_EQ(t.xi_sum, 0);
    EXPECT_FALSE(t.m_f.has_value());
    EXPECT_EQ(t.discrepancies.size(), 1u);
  }
}

// A(0) is built from E-sets; it must have the law of the set visited by a
// walk from the origin before dD_wp(r), and m^E must be geometric.
TEST(Coupling, InitialExcursionMarginalAndGeometricTail) {
  const double r = 16.0;
  const auto& ctx = context(r);
  const auto n_pts = ctx.points().size();
  const int runs = 10000;
  std::vector<std::int64_t> via_e(n_pts, 0), direct(n_pts, 0);
  std::vector<std::int64_t> m_e;
  CouplingOptions opt;
  for (int run = 0; run < runs; ++run) {
    const auto t = coupled_cover_run(ctx, 12, run, opt);
    ASSERT_FALSE(t.censored);
    for (auto i : t.a0) ++via_e[static_cast<std::size_t>(i)];
    for (auto i : initial_excursion_set(ctx, 13, run)) ++direct[static_cast<std::size_t>(i)];
    m_e.push_back(t.m_e);
  }
  std::size_t outside = 0;
  for (std::size_t i = 0; i < n_pts; ++i) {
    const Proportion a{via_e[i], runs}, b{direct[i], runs};
    const double se = std::hypot(a.std_error(), b.std_error());
    if (se > 0.0 && std::abs(a.estimate() - b.estimate()) > 3.0 * se) ++outside;
  }
  EXPECT_LE(static_cast<double>(outside) / static_cast<double>(n_pts), 0.02);

  // Independent estimate of p0 = P{an E-set visits the origin}.
  int hit = 0;
  const int probe = 20000;
  for (int run = 0; run < probe; ++run) {
    const auto s = sample_excursion_set(ctx, 14, run, SetKind::C);
    hit += std::binary_search(s.covered.begin(), s.covered.end(), ctx.origin_index());
  }
  const double p0 = static_cast<double>(hit) / probe;
  const auto a = static_cast<std::int64_t>(std::floor(a_threshold(r)));
  for (std::int64_t k : {std::int64_t{1}, a, 2 * a}) {
    std::int64_t above = 0;
    for (auto m : m_e) above += m > k;
    const double expect = std::pow(1.0 - p0, static_cast<double>(k));
    const double se = std::sqrt(expect * (1.0 - expect) / runs) +
                      k * std::pow(1.0 - p0, static_cast<double>(k - 1)) * std::sqrt(p0 * (1 - p0) / probe);
    EXPECT_NEAR(static_cast<double>(above) / runs, expect, 3.0 * se) << "k = " << k;
  }
}
