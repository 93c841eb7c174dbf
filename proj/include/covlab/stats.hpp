#pragma once

// Summary statistics and the few hypothesis tests used by the checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace covlab {

struct Moments {
  std::int64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const {
    return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
  }
};

/// Two-pass moments; deterministic for a given input order.
inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.count = static_cast<std::int64_t>(xs.size());
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.variance = ss / static_cast<double>(xs.size() - 1);
  }
  return m;
}

/// Linear-interpolation quantile (type 7), q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

struct Proportion {
  std::int64_t hits = 0;
  std::int64_t trials = 0;
  double estimate() const {
    return trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  }
  double std_error() const {
    if (trials == 0) return 0.0;
    const double p = estimate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
};

/// |a - b| / sqrt(se_a^2 + se_b^2); 0 when both errors vanish and a == b.
inline double z_score(double a, double se_a, double b, double se_b) {
  const double s = std::sqrt(se_a * se_a + se_b * se_b);
  if (s == 0.0) return a == b ? 0.0 : INFINITY;
  return std::abs(a - b) / s;
}

/// Kolmogorov survival function P(K > x) for the limiting distribution.
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Small-x form converges faster here.
    const double pi2 = M_PI * M_PI;
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = (2.0 * k - 1.0);
      s += std::exp(-t * t * pi2 / (8.0 * x * x));
    }
    return 1.0 - std::sqrt(2.0 * M_PI) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test of u-values against Uniform(0, 1), with the
/// Stephens finite-n correction.
inline KsResult ks_uniform(std::vector<double> u) {
  if (u.empty()) throw std::invalid_argument("ks test of empty sample");
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / n);
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of observed counts to expected probabilities.
/// Cells with expected count below `min_expected` are pooled together.
inline ChiSquareResult chi_square_fit(const std::vector<std::int64_t>& observed,
                                      const std::vector<double>& probs,
                                      double min_expected = 5.0) {
  if (observed.size() != probs.size() || observed.empty())
    throw std::invalid_argument("chi_square_fit: size mismatch");
  const double n = static_cast<double>(
      std::accumulate(observed.begin(), observed.end(), std::int64_t{0}));
  double stat = 0.0;
  int cells = 0;
  double pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probs[i];
    if (e < min_expected) {
      pool_obs += static_cast<double>(observed[i]);
      pool_exp += e;
      continue;
    }
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  if (pool_exp > 0.0) {
    stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cells;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.dof = std::max(1, cells - 1);
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  return r;
}

/// Total variation distance between two probability vectors.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace covlab
