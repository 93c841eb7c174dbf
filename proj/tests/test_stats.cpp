#include <gtest/gtest.h>

#include "covlab/stats.hpp"

using namespace covlab;

TEST(Stats, MomentsSmallSample) {
  const auto m = moments({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.std_error(), std::sqrt(5.0 / 12.0));
}

TEST(Stats, QuantileType7) {
  const std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(median(xs), 2.5);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.25), 1.75);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Stats, KolmogorovTail) {
  // Reference values of the Kolmogorov distribution.
  EXPECT_NEAR(kolmogorov_sf(1.0), 0.26999967, 1e-6);
  EXPECT_NEAR(kolmogorov_sf(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_sf(0.1), 1.0, 1e-12);
}

TEST(Stats, ChiSquarePerfectFit) {
  const auto r = chi_square_fit({25, 25, 25, 25}, {0.25, 0.25, 0.25, 0.25});
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.dof, 3);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  // Statistic (100 + 0 + 25 + 25)/25 = 6 on 3 dof.
  const auto q = chi_square_fit({35, 25, 20, 20}, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(q.statistic, 6.0, 1e-12);
  EXPECT_NEAR(q.p_value, 0.11161, 5e-5);
}

TEST(Stats, TotalVariation) {
  EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5}, {1.0, 0.0}), 0.5);
  EXPECT_THROW(total_variation({1.0}, {0.5, 0.5}), std::invalid_argument);
}
