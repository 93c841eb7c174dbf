#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <numbers>

#include "covlab/scales.hpp"

using namespace covlab;
using Big = boost::multiprecision::cpp_bin_float_50;
using boost::multiprecision::cpp_rational;

TEST(Scales, FAgainstMultiprecision) {
  for (double x : {100.0, 1e4, 1e8, 1e20}) {
    for (double lambda : {0.1, 0.25, 0.3}) {
      const Big lx = log(Big(x));
      const Big oracle = exp(sqrt(Big(lambda) * lx * log(log(lx))));
      EXPECT_NEAR(f(x, lambda), oracle.convert_to<double>(), 1e-12 * oracle.convert_to<double>());
    }
  }
  const double tower = std::exp(std::exp(std::numbers::e));
  EXPECT_NEAR(f(tower, 1.0), std::exp(std::exp(std::numbers::e / 2.0)), 1e-9);
  EXPECT_NEAR(f(tower, 1.0), 49.06, 0.01);
  EXPECT_DOUBLE_EQ(f(1e6, 0.0), 1.0);
  const Big l100 = 100 * log(Big(10));
  EXPECT_NEAR(f(1e100, 0.25), exp(sqrt(l100 * log(log(l100)) / 4)).convert_to<double>(), 1e-9 * f(1e100, 0.25));
  EXPECT_THROW(f(10.0, 0.25), DomainError);  // log 10 < e
  EXPECT_THROW(f(1e6, -1.0), DomainError);
}

TEST(Scales, WpAndPhi) {
  const Big l = log(Big(100));
  EXPECT_NEAR(phi(100.0), (l * l / log(l)).convert_to<double>(), 1e-12);
  EXPECT_NEAR(phi(100.0), 13.887, 5e-4);
  EXPECT_NEAR(phi(std::exp(std::numbers::e)), std::exp(2.0), 1e-12);
  EXPECT_NEAR(wp(std::numbers::e), std::numbers::e, 1e-12);
  EXPECT_NEAR(wp(30.0), (Big(30) * pow(log(Big(30)), 3)).convert_to<double>(), 1e-9);
  EXPECT_THROW(phi(2.0), DomainError);
  EXPECT_THROW(wp(1.0), DomainError);
  EXPECT_NEAR(phi_from_log(std::log(1e5)), phi(1e5), 1e-12);
  EXPECT_THROW(ilog3(2.0), DomainError);
}

TEST(Scales, ScheduleTimesInLogDomain) {
  const auto t = t_n(1.05, 100);
  const Big oracle = pow(Big(1.05), 100);
  EXPECT_NEAR(t.log_value, oracle.convert_to<double>(), 1e-9);
  EXPECT_FALSE(t.overflow);
  const auto big = t_n(1.05, 200);
  EXPECT_TRUE(big.overflow);
  EXPECT_NEAR(big.log_value, pow(Big(1.05), 200).convert_to<double>(), 1e-6);
  EXPECT_THROW(t_n(1.0, 3), DomainError);
  EXPECT_THROW(t_n(1.05, 0), DomainError);
}

TEST(SeriesExponent, RationalIdentity) {
  // upper = lower * (1 - 3e1/2)(1 - 2e2) / (alpha (1 + 3e1/2)(1 + 2e2)), exactly.
  const cpp_rational lambda(3, 10), alpha(21, 20), e1(1, 100), e2(1, 100);
  const auto up = series_exponent<cpp_rational>(Side::upper, lambda, alpha, e1, e2);
  const auto lo = series_exponent<cpp_rational>(Side::lower, lambda, alpha, e1, e2);
  const cpp_rational ratio = (1 - cpp_rational(3, 2) * e1) * (1 - 2 * e2) /
                             (alpha * (1 + cpp_rational(3, 2) * e1) * (1 + 2 * e2));
  EXPECT_EQ(up.exponent, lo.exponent * ratio);
}

TEST(SeriesExponent, ExampleValues) {
  const auto up = series_exponent(Side::upper, ScheduleParams{0.3, 1.05, 0.01, 0.01});
  EXPECT_NEAR(up.exponent, 1.1036, 5e-5);
  EXPECT_TRUE(up.converges);
  const auto lo = series_exponent(Side::lower, ScheduleParams{0.2, 1.05, 0.01, 0.01});
  EXPECT_LT(lo.exponent, 1.0);
  EXPECT_FALSE(lo.converges);
}

TEST(SeriesExponent, ConvergenceBoundaryIsQuarter) {
  // Both exponents cross 1 near lambda = 1/4 for small eps and alpha.
  for (double lambda : {0.2, 0.24}) {
    EXPECT_FALSE(series_exponent(Side::lower, ScheduleParams{lambda, 1.001, 1e-4, 1e-4}).converges);
    EXPECT_FALSE(series_exponent(Side::upper, ScheduleParams{lambda, 1.001, 1e-4, 1e-4}).converges);
  }
  for (double lambda : {0.26, 0.3}) {
    EXPECT_TRUE(series_exponent(Side::lower, ScheduleParams{lambda, 1.001, 1e-4, 1e-4}).converges);
    EXPECT_TRUE(series_exponent(Side::upper, ScheduleParams{lambda, 1.001, 1e-4, 1e-4}).converges);
  }
}

TEST(TildeEvent, ExactAgainstMultiprecisionProduct) {
  const ScheduleParams s{0.3, 1.05, 0.01, 0.01};
  for (std::int64_t n : {200, 1000, 5000}) {
    const auto got = tilde_event_prob(n, s, Side::upper);
    const Big log_tn = pow(Big(1.05), n), log_t = pow(Big(1.05), n + 1);
    const Big lf = sqrt(Big(0.3) * log_tn * log(log(log_tn)));
    const Big l2f = log(lf);
    const Big phi_f = lf * lf / l2f;
    const Big x = 3 * l2f / (Big(0.51) * log_t - (log(Big(2)) + lf));
    const Big power = floor((Big(2) / 3 - Big(0.01)) * phi_f);
    const Big log_exact = power * log1p(-x);
    EXPECT_NEAR(std::log(got.exact), log_exact.convert_to<double>(),
                1e-9 * std::abs(log_exact.convert_to<double>()) + 1e-9)
        << n;
  }
}

TEST(TildeEvent, RatioApproachesOne) {
  const ScheduleParams s{0.3, 1.05, 0.01, 0.01};
  double prev_err = 1e9;
  for (std::int64_t n : {2000, 5000, 10000, 14000}) {
    const auto p = tilde_event_prob(n, s, Side::upper);
    const double err = std::abs(std::log(p.ratio));
    EXPECT_LT(err, prev_err * 1.0001) << n;
    prev_err = err;
  }
  EXPECT_LT(prev_err, 0.05);
}

TEST(TildeEvent, MonotoneInO1Term) {
  const ScheduleParams s{0.3, 1.05, 0.01, 0.01};
  const auto sens = tilde_event_sensitivity(3000, s, Side::lower);
  EXPECT_GT(sens.at_minus, sens.at_zero);
  EXPECT_GT(sens.at_zero, sens.at_plus);
}

TEST(TildeEvent, DomainErrors) {
  const ScheduleParams s{0.3, 1.05, 0.01, 0.01};
  EXPECT_THROW(tilde_event_prob(1, s, Side::upper), DomainError);
  EXPECT_EQ(ScheduleParams{}.violation(), "");
  EXPECT_NE((ScheduleParams{0.3, 1.05, 0.4, 0.01}.violation()), "");
}

TEST(Expansion, ResidualConstantsBounded) {
  EXPECT_LT(expansion_residual_check(Expansion::est1, 100000, 7), 4.0);
  EXPECT_LT(expansion_residual_check(Expansion::est2, 100000, 7), 4.0);
}
