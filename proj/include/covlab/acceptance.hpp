#pragma once

// Acceptance criteria 1-12. Each criterion returns a pass flag, a one-line
// detail, and a fingerprint of its raw outputs; criterion 12 reruns scaled
// prefixes of the stochastic criteria under different worker counts and
// compares fingerprints.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "covlab/annulus.hpp"
#include "covlab/brownian.hpp"
#include "covlab/coupling.hpp"
#include "covlab/parallel.hpp"
#include "covlab/scales.hpp"
#include "covlab/srw.hpp"
#include "covlab/stats.hpp"

namespace covlab::acceptance {

struct Options {
  std::uint64_t seed = 20240601;
  int workers = 1;
  bool reduced = false;  // criterion 4 at r in {30, 60} only
  double scale = 1.0;    // fraction of the stated sample counts
};

struct Result {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  std::uint64_t fingerprint = 0;
};

/// FNV-1a over the bit patterns of everything fed to it.
class Fingerprint {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  void add(std::int64_t v) { add(static_cast<std::uint64_t>(v)); }
  void add(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof b);
    add(b);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

namespace detail {

inline std::int64_t scaled(std::int64_t n, double scale) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * scale)));
}

template <class... Args>
std::string fmt(Args&&... args) {
  std::ostringstream s;
  s.precision(4);
  (s << ... << args);
  return s.str();
}

// Exact solves and harmonic measures are deterministic; cache them across
// criteria and reruns.
inline std::shared_ptr<const ExcursionContext> context(double r) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const ExcursionContext>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[r];
  if (!slot) slot = std::make_shared<const ExcursionContext>(r);
  return slot;
}

inline double c1_at(double r) {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(r);
  if (it == cache.end()) it = cache.emplace(r, biased_start_deviation(r, axis_boundary_point(wp(r))).c1).first;
  return it->second;
}

/// sum_{k >= 2} C(m, k) a^k (1 - a)^{m - k} by pmf recursion in long double.
inline long double binomial_tail_by_pmf(std::int64_t m, long double a) {
  if (m < 2) return 0.0L;
  long double p = std::pow(1.0L - a, static_cast<long double>(m));
  long double sum = 0.0L;
  for (std::int64_t k = 0; k < m; ++k) {
    if (k >= 2) sum += p;
    p *= static_cast<long double>(m - k) / static_cast<long double>(k + 1) * a / (1.0L - a);
  }
  return sum + p;  // k = m
}

}  // namespace detail

// 1. Hitting law at (8, 40, 200).
inline Result criterion_1(const Options& o) {
  Result res{1, "hitting-law accuracy (8,40,200)"};
  HittingOptions h;
  h.workers = o.workers;
  const auto e = hitting_prob_estimate(8, 40, 200, detail::scaled(10'000, o.scale), o.seed, h);
  const double dev = std::abs(e.value - 0.5);
  res.pass = dev <= 0.03 && e.budget_failures == 0;
  res.detail = detail::fmt("estimate ", e.value, " +- ", e.std_error, ", |est - 0.5| = ", dev, " (tol 0.03), n = ", e.samples);
  Fingerprint f;
  f.add(e.hits);
  f.add(e.samples);
  res.fingerprint = f.value();
  return res;
}

// 2. Monte Carlo against exact solves.
inline Result criterion_2(const Options& o) {
  Result res{2, "exact-oracle agreement (1,2,4) and (2,5,20)"};
  HittingOptions h;
  h.workers = o.workers;
  bool ok = true;
  Fingerprint f;
  std::ostringstream d;
  d.precision(6);
  for (auto [rho, r, P] : {std::tuple{1.0, 2.0, 4.0}, std::tuple{2.0, 5.0, 20.0}}) {
    const auto x = exact_hit_prob(rho, r, P, axis_boundary_point(r));
    const auto e = hitting_prob_estimate(rho, r, P, detail::scaled(100'000, o.scale), o.seed, h);
    const double z = z_score(e.value, e.std_error, x.value, 0.0);
    const double resid = x.stats.mean_value_residual;
    ok = ok && z <= 3.0 && resid <= 1e-10;
    d << "(" << rho << "," << r << "," << P << "): exact " << x.value << ", MC " << e.value << " +- "
      << e.std_error << ", z " << z << ", residual " << resid << "; ";
    f.add(e.hits);
  }
  res.pass = ok;
  res.detail = d.str();
  res.fingerprint = f.value();
  return res;
}

// 3. Exit-time sandwich at r = 50.
inline Result criterion_3(const Options& o) {
  Result res{3, "exit-time sandwich r=50"};
  const double r = 50;
  const auto s = exit_time_stats(r, detail::scaled(2000, o.scale), o.seed, 0.25, o.workers);
  const double se = s.zeta.std_error();
  const bool mean_ok = s.zeta.mean + 3.0 * se > r * r && s.zeta.mean - 3.0 * se <= (r + 1) * (r + 1);
  const bool tail_ok = s.tail_fraction < 0.01;
  res.pass = mean_ok && tail_ok;
  res.detail = detail::fmt("mean zeta ", s.zeta.mean, " +- ", se, " vs (", r * r, ", ", (r + 1) * (r + 1),
                           "] ", mean_ok ? "ok" : "FAIL", "; tail outside (r^1.75, r^2.25) ", s.tail_fraction,
                           " (below ", s.below_fraction, ", above ", s.above_fraction, ") vs < 0.01 ",
                           tail_ok ? "ok" : "FAIL");
  Fingerprint f;
  for (const auto& e : s.samples) f.add(e.zeta);
  res.fingerprint = f.value();
  return res;
}

// 4. Excursion counts N_r / phi_r.
inline Result criterion_4(const Options& o) {
  Result res{4, "excursion-count law N_r/phi_r"};
  std::vector<double> radii = o.reduced ? std::vector<double>{30, 60} : std::vector<double>{30, 60, 120};
  CoverOptions opt;
  opt.far_field = FarField::full;
  const auto n = detail::scaled(200, o.scale);
  bool ok = true;
  double prev_gap = INFINITY;
  Fingerprint f;
  std::ostringstream d;
  d.precision(4);
  for (double r : radii) {
    const std::int64_t offset = static_cast<std::int64_t>(r) << 24;
    const auto runs = parallel_map(n, o.workers, [&](std::int64_t i) { return simulate_cover(r, o.seed, offset + i, opt); });
    std::vector<double> v;
    std::int64_t failures = 0;
    for (const auto& run : runs) {
      if (run.status != RunStatus::ok) { ++failures; continue; }
      v.push_back(static_cast<double>(run.excursions) / phi(r));
      f.add(run.excursions);
      f.add(run.cover_time);
    }
    const double med = v.empty() ? NAN : median(v);
    const double mean = v.empty() ? NAN : moments(v).mean;
    const double gap = std::abs(mean - 2.0 / 3.0);
    const bool med_ok = med > 0.4 && med < 1.0;
    const bool trend_ok = gap <= prev_gap;
    ok = ok && med_ok && trend_ok && failures == 0;
    d << "r=" << r << ": median " << med << (med_ok ? "" : " (outside (0.4,1.0))") << ", mean " << mean
      << ", |mean-2/3| " << gap << (trend_ok ? "" : " (increased)") << ", failures " << failures << "; ";
    prev_gap = gap;
  }
  res.pass = ok;
  res.detail = d.str() + "engine: far-field walk on spheres, near-field lattice steps";
  res.fingerprint = f.value();
  return res;
}

// 5. i.i.d. covering threshold at r = 40.
inline Result criterion_5(const Options& o) {
  Result res{5, "i.i.d. covering threshold r=40"};
  const double r = 40;
  const auto ctx = detail::context(r);
  const auto k_lo = static_cast<std::int64_t>(std::floor(0.33 * phi(r)));
  const auto k_hi = static_cast<std::int64_t>(std::ceil(1.33 * phi(r)));
  const auto trials = detail::scaled(200, o.scale);
  auto freq = [&](std::int64_t k, std::uint64_t seed) {
    const auto v = parallel_map(trials, o.workers, [&](std::int64_t i) { return run_union_process(*ctx, k, SetKind::C, seed, i); });
    std::int64_t cov = 0;
    for (const auto& u : v) cov += u.covered;
    return static_cast<double>(cov) / static_cast<double>(trials);
  };
  const double lo = freq(k_lo, o.seed);
  const double hi = freq(k_hi, o.seed + 1);
  res.pass = lo < 0.2 && (1.0 - hi) < 0.2;
  res.detail = detail::fmt("phi_r ", phi(r), "; k=", k_lo, ": coverage ", lo, " (< 0.2 ", lo < 0.2 ? "ok" : "FAIL",
                           "); k=", k_hi, ": non-coverage ", 1.0 - hi, " (< 0.2 ", (1.0 - hi) < 0.2 ? "ok" : "FAIL", ")");
  Fingerprint f;
  f.add(lo);
  f.add(hi);
  res.fingerprint = f.value();
  return res;
}

// 6. Coupling arithmetic and tails.
inline Result criterion_6(const Options& o) {
  Result res{6, "coupling arithmetic and tails"};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::int64_t m = 1 + 7 * i;
    const double a = (i + 0.5) / 51.0;
    worst = std::max(worst, static_cast<double>(std::abs(static_cast<long double>(xi_tail_prob(m, a)) -
                                                         detail::binomial_tail_by_pmf(m, a))));
  }
  const bool arith_ok = worst <= 1e-12;

  const double r = 30;
  const auto ctx = detail::context(r);
  CouplingOptions opt;
  opt.c1 = detail::c1_at(r);
  const auto runs = detail::scaled(500, o.scale);
  const auto traces = parallel_map(runs, o.workers, [&](std::int64_t i) { return coupled_cover_run(*ctx, o.seed, i, opt); });
  std::int64_t gt1 = 0, me_big = 0, contained = 0;
  Fingerprint f;
  for (const auto& t : traces) {
    gt1 += t.xi_sum > 1;
    me_big += !t.m_e_within_a;
    contained += t.a0_contained;
    f.add(t.xi_sum);
    f.add(t.m_e);
    f.add(t.m_f.value_or(-1));
  }
  const auto m = static_cast<std::int64_t>(std::floor(opt.u * phi(r)));
  const double alpha = opt.c1 / std::pow(std::log(r), 2);
  const double p = xi_tail_prob(m, alpha);
  const double freq = static_cast<double>(gt1) / static_cast<double>(runs);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
  const bool xi_ok = std::abs(freq - p) <= 3.0 * se;
  const double me_freq = static_cast<double>(me_big) / static_cast<double>(runs);
  const bool me_ok = me_freq < 0.1;
  res.pass = arith_ok && xi_ok && me_ok && contained == runs;
  res.detail = detail::fmt("max |xi_tail - pmf sum| ", worst, " (<= 1e-12); {sum xi > 1}: ", freq, " vs exact ", p,
                           " +- ", se, " (c1 ", opt.c1, ", m ", m, "); P(m^E > a=", a_threshold(r), ") ", me_freq,
                           " (< 0.1); A(0) in E(m^E) ", contained, "/", runs);
  res.fingerprint = f.value();
  return res;
}

// 7. Brownian annulus law at (1, e, e^2).
inline Result criterion_7(const Options& o) {
  Result res{7, "Brownian annulus law (1,e,e^2)"};
  const double e = std::numbers::e;
  const auto n = detail::scaled(10'000, o.scale);
  const auto sides = parallel_map(n, o.workers, [&](std::int64_t i) {
    Stream rng = Stream::for_run(o.seed, static_cast<std::uint64_t>(i), 7);
    return sample_annulus_side({e, 0.0}, 1.0, e * e, 1e-6, rng).inner ? 1 : 0;
  });
  std::int64_t inner = 0;
  Fingerprint f;
  for (int s : sides) { inner += s; f.add(static_cast<std::int64_t>(s)); }
  const double freq = static_cast<double>(inner) / static_cast<double>(n);
  res.pass = std::abs(freq - 0.5) <= 0.02;
  res.detail = detail::fmt("inner-hit frequency ", freq, " vs 0.5 +- 0.02 (formula ", annulus_hit_prob_formula(1, e, e * e), ")");
  res.fingerprint = f.value();
  return res;
}

// 8. Brownian exit time from D(0, 10).
inline Result criterion_8(const Options& o) {
  Result res{8, "Brownian exit time r=10"};
  const auto n = detail::scaled(2000, o.scale);
  const auto a = brownian_exit_stats(10, n, o.seed, 1e-3, 0, 0.25, o.workers);
  const auto b = brownian_exit_stats(10, n, o.seed, 1e-3, 1, 0.25, o.workers);
  const bool mean_ok = std::abs(a.time.mean - 50.0) <= 3.0 * a.time.std_error();
  const double shift = std::abs(b.time.mean - a.time.mean) / a.time.mean;
  res.pass = mean_ok && shift < 0.01;
  res.detail = detail::fmt("mean ", a.time.mean, " +- ", a.time.std_error(), " vs 50; dt/2 mean ", b.time.mean,
                           ", relative shift ", shift, " (< 0.01)");
  Fingerprint f;
  for (double t : a.samples) f.add(t);
  for (double t : b.samples) f.add(t);
  res.fingerprint = f.value();
  return res;
}

// 9. Torus epsilon-cover.
inline Result criterion_9(const Options& o) {
  Result res{9, "torus eps-cover"};
  const auto n = detail::scaled(50, o.scale);
  Fingerprint f;
  auto mean_at = [&](double eps) {
    const auto v = parallel_map(n, o.workers, [&](std::int64_t i) { return torus_cover_time(eps, o.seed, i); });
    std::vector<double> xs;
    for (const auto& r : v) { xs.push_back(r.normalized); f.add(r.steps); }
    return moments(xs).mean;
  };
  const double m02 = mean_at(0.02), m05 = mean_at(0.05), m01 = mean_at(0.01);
  const double target = 2.0 / std::numbers::pi;
  const bool band = m02 > 0.3 && m02 < 1.1;
  const bool trend = std::abs(m01 - target) < std::abs(m05 - target);
  res.pass = band && trend;
  res.detail = detail::fmt("mean C/(log eps)^2: eps=0.02 ", m02, " (in (0.3,1.1)); eps=0.05 ", m05, ", eps=0.01 ", m01,
                           "; 0.01 closer to 2/pi: ", trend ? "yes" : "no");
  res.fingerprint = f.value();
  return res;
}

// 10. Sausage excursions at r = 30, R = 0.1.
inline Result criterion_10(const Options& o) {
  Result res{10, "sausage excursions r=30 R=0.1"};
  const double r = 30;
  const auto n = detail::scaled(100, o.scale);
  const auto v = parallel_map(n, o.workers, [&](std::int64_t i) { return sausage_cover_run(r, o.seed, i); });
  std::vector<double> xs;
  std::int64_t failures = 0;
  bool alternates = true;
  Fingerprint f;
  for (const auto& s : v) {
    if (s.status != RunStatus::ok) { ++failures; continue; }
    xs.push_back(static_cast<double>(s.excursions) / phi(r));
    alternates = alternates && s.ledger_alternates;
    f.add(s.excursions);
    f.add(s.cover_time);
  }
  const double med = xs.empty() ? NAN : median(xs);
  res.pass = med > 0.4 && med < 1.0 && failures == 0 && alternates;
  res.detail = detail::fmt("median N_r/phi_r ", med, " vs (0.4, 1.0); mean ", xs.empty() ? NAN : moments(xs).mean,
                           "; failures ", failures, "; ledger alternates ", alternates ? "yes" : "no");
  res.fingerprint = f.value();
  return res;
}

// 11. Series threshold and tilde-event asymptotics.
inline Result criterion_11(const Options&) {
  Result res{11, "series threshold at lambda=1/4"};
  using Q = boost::multiprecision::cpp_rational;
  const Q quarter(1, 4), one(1), zero(0), tiny(1, 1'000'000'000);
  bool exact_ok = true;
  for (Side side : {Side::upper, Side::lower}) {
    const auto at = series_exponent<Q>(side, quarter, one, zero, zero);
    const auto above = series_exponent<Q>(side, quarter + tiny, one, zero, zero);
    const auto below = series_exponent<Q>(side, quarter - tiny, one, zero, zero);
    exact_ok = exact_ok && at.exponent == one && !at.converges && above.converges && !below.converges;
  }
  const ScheduleParams s{0.3, 1.05, 0.01, 0.01};
  std::int64_t checked = 0;
  double worst = 0.0;
  for (Side side : {Side::upper, Side::lower}) {
    for (std::int64_t n = 1; n <= 14'000; ++n) {
      try {
        const auto p = tilde_event_prob(n, s, side);
        if (p.max_error_term() < 0.01) {
          ++checked;
          worst = std::max(worst, std::abs(p.ratio - 1.0));
        }
      } catch (const DomainError&) {
      }
    }
  }
  res.pass = exact_ok && checked > 0 && worst <= 0.05;
  res.detail = detail::fmt("exponent(1/4, alpha=1, eps=0) == 1 exactly and flips at 1/4 +- 1e-9: ",
                           exact_ok ? "yes" : "no", "; tilde ratio max |ratio - 1| ", worst, " over ", checked,
                           " (n, side) with error terms < 0.01 (tol 0.05)");
  return res;
}

using CriterionFn = Result (*)(const Options&);

inline const std::vector<CriterionFn>& stochastic_criteria() {
  static const std::vector<CriterionFn> fns = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                               criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  return fns;
}

// 12. Determinism under reruns and worker counts.
inline Result criterion_12(const Options& o, double prefix = 0.02) {
  Result res{12, "determinism across reruns and worker counts"};
  Options a = o, b = o;
  a.scale = b.scale = prefix;
  a.reduced = b.reduced = true;
  a.workers = 1;
  b.workers = std::max(3, o.workers);
  std::vector<int> bad;
  for (auto fn : stochastic_criteria()) {
    const auto x = fn(a), y = fn(b), z = fn(a);
    if (x.fingerprint != y.fingerprint || x.fingerprint != z.fingerprint || x.detail != y.detail) bad.push_back(x.id);
  }
  res.pass = bad.empty();
  std::ostringstream d;
  d << "criteria 1-10 at " << prefix << " of stated size, workers 1/1/" << b.workers << ": ";
  if (bad.empty()) d << "all fingerprints identical";
  else for (int id : bad) d << "criterion " << id << " differs; ";
  res.detail = d.str();
  return res;
}

inline std::vector<Result> run_all(const Options& o, const std::function<void(const Result&)>& on_result = {}) {
  std::vector<Result> out;
  auto timed = [&](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r = fn();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(r);
  };
  for (auto fn : stochastic_criteria()) timed([&] { return fn(o); });
  timed([&] { return criterion_11(o); });
  timed([&] { return criterion_12(o); });
  return out;
}

inline std::string format_line(const Result& r) {
  std::ostringstream s;
  s.precision(3);
  s << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << ": " << r.title << " | " << r.detail << " | "
    << std::fixed << r.seconds << " s";
  return s.str();
}

}  // namespace covlab::acceptance
