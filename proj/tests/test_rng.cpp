#include <gtest/gtest.h>

#include <set>

#include "covlab/rng.hpp"
#include "covlab/stats.hpp"

using namespace covlab;

// Known-answer vectors distributed with the Random123 library (kat_vectors).
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  EXPECT_EQ(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Stream, ReplayIsExact) {
  Stream a = Stream::for_run(42, 7, 3), b = Stream::for_run(42, 7, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DistinctRunsAndSubstreamsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t run = 0; run < 50; ++run)
    for (std::uint64_t sub = 0; sub < 20; ++sub) first.insert(Stream::for_run(1, run, sub).next_u64());
  EXPECT_EQ(first.size(), 1000u);
}

TEST(Stream, UniformIsUniform) {
  Stream s = Stream::for_run(3, 0, 0);
  std::vector<double> u(20000);
  for (auto& x : u) {
    x = s.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
  EXPECT_GT(ks_uniform(u).p_value, 0.001);
}

TEST(Stream, BelowIsUnbiased) {
  Stream s = Stream::for_run(4, 0, 0);
  std::vector<std::int64_t> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[static_cast<std::size_t>(s.below(7))];
  EXPECT_GT(chi_square_fit(counts, std::vector<double>(7, 1.0 / 7)).p_value, 0.001);
}

TEST(Stream, NormalMoments) {
  Stream s = Stream::for_run(5, 0, 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = s.normal();
  const auto m = moments(x);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * m.std_error());
  EXPECT_NEAR(m.variance, 1.0, 3.0 * std::sqrt(2.0 / 100000));
}
