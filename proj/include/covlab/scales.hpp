#pragma once

// Schedule functions for the cover-radius LIL and the series computations
// around the critical constant 1/4.
//
// Logs are natural. log2(x) below means ln ln x and log3(x) means
// ln ln ln x (iterated, never a change of base).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "covlab/rng.hpp"

namespace covlab {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double ilog2(double x) {
  if (!(x > 1.0)) throw DomainError("log2 needs x > 1");
  return std::log(std::log(x));
}

inline double ilog3(double x) {
  if (!(x > std::exp(1.0))) throw DomainError("log3 needs x > e");
  return std::log(std::log(std::log(x)));
}

/// f(x) = exp(sqrt(lambda * log x * log3 x)), x > e^e.
inline double log_f_from_log(double log_x, double lambda) {
  if (!(log_x > std::numbers::e)) throw DomainError("f needs log x > e");
  if (lambda < 0.0) throw DomainError("f needs lambda >= 0");
  return std::sqrt(lambda * log_x * std::log(std::log(log_x)));
}

inline double f(double x, double lambda) {
  if (!(x > 0.0)) throw DomainError("f needs x > e^e");
  return std::exp(log_f_from_log(std::log(x), lambda));
}

/// wp(x) = x (log x)^3, x > 1.
inline double wp(double x) {
  if (!(x > 1.0)) throw DomainError("wp needs x > 1");
  const double l = std::log(x);
  return x * l * l * l;
}

/// phi(x) = (log x)^2 / log2 x, x > e.
inline double phi(double x) {
  if (!(x > std::numbers::e)) throw DomainError("phi needs x > e");
  const double l = std::log(x);
  return l * l / std::log(l);
}

/// phi expressed through log x, for arguments that overflow a double.
inline double phi_from_log(double log_x) {
  if (!(log_x > 1.0)) throw DomainError("phi needs log x > 1");
  return log_x * log_x / std::log(log_x);
}

struct ScheduleTime {
  double log_value = 0.0;  // alpha^n
  double value = 0.0;      // e^{alpha^n}, +inf on overflow
  bool overflow = false;
};

/// t_n = e^{alpha^n}. The log-domain value is always returned.
inline ScheduleTime t_n(double alpha, std::int64_t n) {
  if (!(alpha > 1.0)) throw DomainError("t_n needs alpha > 1");
  if (n < 1) throw DomainError("t_n needs n >= 1");
  ScheduleTime t;
  t.log_value = std::pow(alpha, static_cast<double>(n));
  t.value = std::exp(t.log_value);
  t.overflow = !std::isfinite(t.value);
  return t;
}

struct ScheduleParams {
  double lambda = 0.25;
  double alpha = 1.05;
  double eps1 = 0.01;
  double eps2 = 0.01;

  /// Empty string if valid, else a description of the first violation.
  std::string violation() const {
    if (!(lambda > 0.0)) return "lambda must be > 0";
    if (!(alpha > 1.0)) return "alpha must be > 1";
    if (!(eps1 > 0.0 && eps1 < 1.0 / 3.0)) return "eps1 must be in (0, 1/3)";
    if (!(eps2 > 0.0 && eps2 < 0.5)) return "eps2 must be in (0, 1/2)";
    return {};
  }
};

enum class Side { upper, lower };

template <class T>
struct SeriesExponent {
  T exponent;
  bool converges;
};

/// Exponent p of the comparison series sum n^{-p}.
///   upper: (4 lambda / alpha) (1 - 3 eps1/2) / (1 + 2 eps2)
///   lower: 4 lambda (1 + 3 eps1/2) / (1 - 2 eps2)
/// Works for any field type T (double, boost rationals, multiprecision).
template <class T>
SeriesExponent<T> series_exponent(Side side, const T& lambda, const T& alpha,
                                  const T& eps1, const T& eps2) {
  const T one(1), two(2), three(3), four(4);
  T p;
  if (side == Side::upper)
    p = (four * lambda / alpha) * (one - three * eps1 / two) / (one + two * eps2);
  else
    p = four * lambda * (one + three * eps1 / two) / (one - two * eps2);
  const bool conv = p > one;
  return {p, conv};
}

inline SeriesExponent<double> series_exponent(Side side, const ScheduleParams& s) {
  return series_exponent<double>(side, s.lambda, s.alpha, s.eps1, s.eps2);
}

struct TildeEventProb {
  double exact = 0.0;      // product form with the O(1) term set to `o1`
  double surrogate = 0.0;  // exp[-c (log f)^2 / log t]
  double ratio = 0.0;      // exact / surrogate
  double bracket = 0.0;    // the base of the power
  double power = 0.0;      // floor((2/3 -+ eps1) phi_f)
  // Error terms of the asymptotic expansion.
  double e1 = 0.0;  // (log2 f)^2 phi_f / (log t)^2
  double e2 = 0.0;  // phi_f / log t
  double e3 = 0.0;  // log2 f / log t
  double max_error_term() const { return std::max({e1, e2, e3}); }
};

/// Probability of at least floor((2/3 -+ eps1) phi_f) excursions from
/// dD_{2f} to dD_{wp(f)} before the walk reaches radius t^{1/2 +- eps2},
/// with f = f(t_n). Upper side uses t_{n+1} and 1/2 + eps2, lower side t_n
/// and 1/2 - eps2. Computed in log domain throughout.
inline TildeEventProb tilde_event_prob(std::int64_t n, const ScheduleParams& s,
                                       Side side, double o1 = 0.0) {
  const double log_tn = t_n(s.alpha, n).log_value;
  const double log_t = side == Side::upper ? t_n(s.alpha, n + 1).log_value : log_tn;
  const double lf = log_f_from_log(log_tn, s.lambda);
  if (!(lf > 1.0)) throw DomainError("tilde_event_prob needs log f(t_n) > 1");
  const double l2f = std::log(lf);
  const double phi_f = lf * lf / l2f;
  const double half = side == Side::upper ? 0.5 + s.eps2 : 0.5 - s.eps2;
  const double denom = half * log_t - (std::numbers::ln2 + lf);
  const double x = (3.0 * l2f + o1) / denom;
  if (!(denom > 0.0) || !(x > 0.0) || !(x < 1.0))
    throw DomainError("tilde_event_prob bracket outside (0, 1) at n=" + std::to_string(n));

  TildeEventProb out;
  out.bracket = 1.0 - x;
  const double share = side == Side::upper ? 2.0 / 3.0 - s.eps1 : 2.0 / 3.0 + s.eps1;
  out.power = std::floor(share * phi_f);
  const double log_exact = out.power * std::log1p(-x);
  const double c = side == Side::upper
                       ? 4.0 * (1.0 - 1.5 * s.eps1) / (1.0 + 2.0 * s.eps2)
                       : 4.0 * (1.0 + 1.5 * s.eps1) / (1.0 - 2.0 * s.eps2);
  const double log_sur = -c * lf * lf / log_t;
  out.exact = std::exp(log_exact);
  out.surrogate = std::exp(log_sur);
  out.ratio = std::exp(log_exact - log_sur);
  out.e1 = l2f * l2f * phi_f / (log_t * log_t);
  out.e2 = phi_f / log_t;
  out.e3 = l2f / log_t;
  return out;
}

struct Sensitivity {
  double at_zero = 0.0;
  double at_minus = 0.0;
  double at_plus = 0.0;
  double spread() const { return std::abs(at_plus - at_minus); }
};

/// tilde_event_prob re-evaluated with the O(1) term at -1, 0 and +1.
inline Sensitivity tilde_event_sensitivity(std::int64_t n, const ScheduleParams& s,
                                           Side side) {
  return {tilde_event_prob(n, s, side, 0.0).exact,
          tilde_event_prob(n, s, side, -1.0).exact,
          tilde_event_prob(n, s, side, 1.0).exact};
}

// Residual checks for the two expansion identities used when simplifying
// tilde_event_prob. Each returns the largest fitted constant C observed.

/// |(a - e)/(b + d) - a/b| <= C (|e/b| + |a d/b^2|), |e| < |a|/2, |d| < |b|/2.
inline double est1_scaled_residual(double a, double b, double e, double d) {
  if (!(std::abs(e) < 0.5 * std::abs(a) || e == 0.0) || !(std::abs(d) < 0.5 * std::abs(b)))
    throw DomainError("est1 hypotheses violated");
  const double lhs = std::abs((a - e) / (b + d) - a / b);
  const double scale = std::abs(e / b) + std::abs(a * d / (b * b));
  if (scale == 0.0) return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return lhs / scale;
}

/// |(1 - al + e)^{be + d} - e^{-al be}| <= C e^{-al be}(al^2 be + be|e| + al|d|).
inline double est2_scaled_residual(double al, double be, double e, double d) {
  if (!(std::abs(d) < 1.0) || be < 0.0 || !(1.0 - al + e > 0.0))
    throw DomainError("est2 hypotheses violated");
  // Divided through by e^{-al be}, which underflows for large be.
  const double lhs = std::abs(std::expm1((be + d) * std::log1p(-al + e) + al * be));
  const double scale = al * al * be + be * std::abs(e) + al * std::abs(d);
  if (scale == 0.0) return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return lhs / scale;
}

enum class Expansion { est1, est2 };

/// Largest scaled residual over `samples` random tuples that satisfy the
/// identity's hypotheses.
inline double expansion_residual_check(Expansion kind, std::int64_t samples,
                                       std::uint64_t seed) {
  Stream rng = Stream::for_run(seed, 0, 0x65737400u + static_cast<unsigned>(kind));
  double worst = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    double c = 0.0;
    if (kind == Expansion::est1) {
      const double a = (rng.uniform() * 2.0 - 1.0) * std::pow(10.0, 4.0 * rng.uniform() - 2.0);
      double b = (rng.uniform() * 2.0 - 1.0) * std::pow(10.0, 4.0 * rng.uniform() - 2.0);
      if (b == 0.0) b = 1.0;
      const double e = 0.5 * a * (rng.uniform() * 2.0 - 1.0) * 0.999;
      const double d = 0.5 * b * (rng.uniform() * 2.0 - 1.0) * 0.999;
      c = est1_scaled_residual(a, b, e, d);
    } else {
      const double al = std::pow(10.0, -4.0 + 3.0 * rng.uniform());  // [1e-4, 0.1]
      const double be = rng.uniform() / (al * al);                     // al^2 be <= 1
      const double emax = std::min(0.1 * al, be > 0.0 ? 1.0 / be : 0.1 * al);
      const double e = emax * (rng.uniform() * 2.0 - 1.0);
      const double d = (rng.uniform() * 2.0 - 1.0) * 0.999;
      c = est2_scaled_residual(al, be, e, d);
    }
    worst = std::max(worst, c);
  }
  return worst;
}

}  // namespace covlab
