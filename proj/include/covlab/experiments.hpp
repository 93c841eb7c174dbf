#pragma once

// Experiment orchestration: validated configs, seeded parallel runs,
// incremental record emission, and the LIL statistic report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "covlab/annulus.hpp"
#include "covlab/brownian.hpp"
#include "covlab/config.hpp"
#include "covlab/coupling.hpp"
#include "covlab/parallel.hpp"
#include "covlab/records.hpp"
#include "covlab/scales.hpp"
#include "covlab/srw.hpp"

namespace covlab {

enum class ExperimentKind {
  srw_cover, sausage_cover, hitting, exit_time, iid_cover, coupling, torus_cover, series_scan,
  lil_statistic
};

inline const std::vector<std::pair<ExperimentKind, const char*>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, const char*>> names = {
      {ExperimentKind::srw_cover, "srw-cover"},       {ExperimentKind::sausage_cover, "sausage-cover"},
      {ExperimentKind::hitting, "hitting"},           {ExperimentKind::exit_time, "exit-time"},
      {ExperimentKind::iid_cover, "iid-cover"},       {ExperimentKind::coupling, "coupling"},
      {ExperimentKind::torus_cover, "torus-cover"},   {ExperimentKind::series_scan, "series-scan"},
      {ExperimentKind::lil_statistic, "lil-statistic"}};
  return names;
}

inline const char* to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "?";
}

inline ExperimentKind experiment_from_string(const std::string& s) {
  for (const auto& [kind, name] : experiment_names())
    if (s == name) return kind;
  throw ConfigError("unknown experiment '" + s + "'");
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::srw_cover;
  Config values;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  std::int64_t budget = kDefaultStepBudget;

  static ExperimentConfig from(const Config& c) {
    ExperimentConfig e;
    e.values = c;
    e.kind = experiment_from_string(c.get("experiment"));
    e.seed = c.get_u64("seed");
    e.workers = static_cast<int>(c.get_int("workers"));
    e.out = c.get("out");
    e.budget = c.get_int("budget.steps");
    e.validate();
    return e;
  }

  /// Checks every parameter against the owning module's preconditions.
  void validate() const {
    auto need = [](bool ok, const std::string& msg) {
      if (!ok) throw ConfigError(msg);
    };
    const Config& c = values;
    need(workers >= 1, "workers must be >= 1");
    need(budget >= 1, "budget.steps must be >= 1");
    switch (kind) {
      case ExperimentKind::srw_cover: {
        for (double r : c.get_doubles("srw.r")) need(r >= 8.0, "srw.r: cover runs need r >= 8");
        need(!c.get_doubles("srw.r").empty(), "srw.r is empty");
        need(c.get_int("srw.samples") >= 1, "srw.samples must be >= 1");
        const auto ff = far_field_from_string(c.get("srw.far_field"));
        if (ff != FarField::none)
          for (double r : c.get_doubles("srw.r"))
            FarFieldGeometry::make(r, wp(r), c.get_double("srw.l_in"), c.get_double("srw.l_out"));
        break;
      }
      case ExperimentKind::sausage_cover: {
        SausageOptions o = sausage_options();
        for (double r : c.get_doubles("sausage.r")) validate_sausage(r, o);
        need(c.get_int("sausage.samples") >= 1, "sausage.samples must be >= 1");
        break;
      }
      case ExperimentKind::hitting: {
        const auto target = c.get("hitting.target");
        need(target == "circle" || target == "origin", "hitting.target must be circle or origin");
        const double rho = c.get_double("hitting.rho"), r = c.get_double("hitting.r"), P = c.get_double("hitting.P");
        if (target == "circle") need(0.0 <= rho && rho < r && r < P, "hitting needs 0 <= rho < r < P");
        else need(0.0 < r && r < P, "hitting needs 0 < r < P");
        need(c.get_int("hitting.samples") >= 1, "hitting.samples must be >= 1");
        c.get_bool("hitting.symmetrized");
        c.get_bool("hitting.exact");
        break;
      }
      case ExperimentKind::exit_time: {
        const auto engine = c.get("exit.engine");
        need(engine == "lattice" || engine == "brownian", "exit.engine must be lattice or brownian");
        need(c.get_double("exit.r") >= (engine == "lattice" ? 0.0 : 1.0), "exit.r out of range");
        need(c.get_int("exit.samples") >= 1, "exit.samples must be >= 1");
        need(c.get_double("exit.eps") > 0.0, "exit.eps must be > 0");
        need(c.get_double("exit.dt") > 0.0, "exit.dt must be > 0");
        break;
      }
      case ExperimentKind::iid_cover: {
        need(c.get_double("iid.r") >= 8.0, "iid.r: excursion sets need r >= 8");
        need(c.get_int("iid.trials") >= 1, "iid.trials must be >= 1");
        for (auto k : union_sizes()) need(k >= 0, "union sizes must be >= 0");
        const auto kind_s = c.get("iid.kind");
        need(kind_s == "C" || kind_s == "E" || kind_s == "F", "iid.kind must be C, E or F");
        break;
      }
      case ExperimentKind::coupling: {
        need(c.get_double("coupling.r") >= 8.0, "coupling.r: needs r >= 8");
        need(c.get_int("coupling.runs") >= 1, "coupling.runs must be >= 1");
        if (c.get("coupling.c1") != "auto") need(c.get_double("coupling.c1") > 0.0, "coupling.c1 must be > 0");
        need(c.get_double("coupling.u") > 0.0, "coupling.u must be > 0");
        c.get_bool("coupling.force_zero_xi");
        break;
      }
      case ExperimentKind::torus_cover: {
        for (double e : c.get_doubles("torus.eps")) need(e > 0.0 && e <= 0.05, "torus.eps must be in (0, 0.05]");
        const double dt = c.get_double("torus.dt");
        if (dt > 0.0)
          for (double e : c.get_doubles("torus.eps")) need(dt <= e * e / 25.0, "torus.dt must be <= eps^2/25");
        need(c.get_int("torus.samples") >= 1, "torus.samples must be >= 1");
        break;
      }
      case ExperimentKind::series_scan: {
        for (double l : c.get_doubles("series.lambda")) {
          ScheduleParams s{l, c.get_double("series.alpha"), c.get_double("series.eps1"), c.get_double("series.eps2")};
          need(s.violation().empty(), "series: " + s.violation());
        }
        for (auto n : c.get_ints("series.n")) need(n >= 1, "series.n must be >= 1");
        break;
      }
      case ExperimentKind::lil_statistic: {
        need(c.get_double("lil.extent") >= 1.0, "lil.extent must be >= 1");
        need(c.get_int("lil.first") >= 1 && c.get_int("lil.last") >= c.get_int("lil.first"), "bad lil checkpoints");
        need(c.get_double("lil.ratio") > 1.0, "lil.ratio must be > 1");
        need(c.get_int("lil.samples") >= 1, "lil.samples must be >= 1");
        break;
      }
    }
  }

  SausageOptions sausage_options() const {
    SausageOptions o;
    o.R = values.get_double("sausage.R");
    o.dt = values.get_double("sausage.dt");
    o.refine = static_cast<int>(values.get_int("sausage.refine"));
    o.h = values.get_double("sausage.h");
    o.sausage_radius = values.get_double("sausage.radius");
    o.budget_steps = budget;
    return o;
  }

  std::vector<std::int64_t> union_sizes() const {
    if (!values.get("iid.k").empty()) return values.get_ints("iid.k");
    const double ph = phi(values.get_double("iid.r"));
    std::vector<std::int64_t> out;
    // Below-threshold multiples round down, above-threshold multiples up.
    for (double m : values.get_doubles("iid.k_phi"))
      out.push_back(static_cast<std::int64_t>(m < 2.0 / 3.0 ? std::floor(m * ph) : std::ceil(m * ph)));
    return out;
  }

 private:
  static void validate_sausage(double r, const SausageOptions& o) {
    try {
      covlab::validate(r, o);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sausage: ") + e.what());
    }
  }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string group_label(const char* name, double v) {
  std::ostringstream s;
  s << name << '=' << v;
  return s.str();
}

/// Runs fn(i) for i in [0, n) on `workers` threads, appending records in
/// index order chunk by chunk.
template <class F>
void run_indexed(std::int64_t n, int workers, RecordAppender& sink, std::vector<RunRecord>& all, F&& fn) {
  const std::int64_t chunk = std::max<std::int64_t>(1, 4 * static_cast<std::int64_t>(workers));
  for (std::int64_t start = 0; start < n; start += chunk) {
    const std::int64_t count = std::min(chunk, n - start);
    auto recs = parallel_map(count, workers, [&](std::int64_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      RunRecord r = fn(start + i);
      r.wall_ms = elapsed_ms(t0);
      return r;
    });
    for (auto& r : recs) {
      sink.append(r);
      all.push_back(std::move(r));
    }
  }
}

}  // namespace detail

/// c1 fitted by exact solve at r, from the axis point of dD_{wp(r)}.
inline double fitted_c1(double r) {
  return biased_start_deviation(r, axis_boundary_point(wp(r))).c1;
}

/// Executes the experiment. Records are appended to `sink` as they complete
/// and also returned.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, RecordAppender& sink) {
  cfg.validate();
  const Config& c = cfg.values;
  std::vector<RunRecord> all;
  auto base = [&](const std::string& group, std::int64_t run) {
    RunRecord r;
    r.experiment = to_string(cfg.kind);
    r.group = group;
    r.run = run;
    r.seed = cfg.seed;
    return r;
  };

  switch (cfg.kind) {
    case ExperimentKind::srw_cover: {
      CoverOptions opt;
      opt.far_field = far_field_from_string(c.get("srw.far_field"));
      opt.l_in = c.get_double("srw.l_in");
      opt.l_out = c.get_double("srw.l_out");
      opt.budget = cfg.budget;
      const auto n = c.get_int("srw.samples");
      for (double r : c.get_doubles("srw.r")) {
        // Runs at different radii use disjoint run indices.
        const std::int64_t offset = static_cast<std::int64_t>(std::llround(r * 1000.0)) << 24;
        detail::run_indexed(n, cfg.workers, sink, all, [&](std::int64_t i) {
          const auto res = simulate_cover(r, cfg.seed, offset + i, opt);
          auto rec = base(detail::group_label("r", r), i);
          rec.params = {{"r", r}, {"far_field", to_string(opt.far_field)}, {"budget_steps", opt.budget}};
          if (res.status == RunStatus::ok) {
            rec.outputs = {{"T_r", res.cover_time}, {"N_r", res.excursions},
                           {"N_over_phi", static_cast<double>(res.excursions) / phi(r)}};
          }
          rec.diagnostics = {{"status", to_string(res.status)}, {"wall_steps", res.wall_steps},
                             {"time_exact", res.time_exact}, {"far_field_jumps", res.far_field_jumps},
                             {"stream_run", offset + i}};
          return rec;
        });
      }
      break;
    }
    case ExperimentKind::sausage_cover: {
      const auto o = cfg.sausage_options();
      const auto n = c.get_int("sausage.samples");
      for (double r : c.get_doubles("sausage.r")) {
        const std::int64_t offset = static_cast<std::int64_t>(std::llround(r * 1000.0)) << 24;
        detail::run_indexed(n, cfg.workers, sink, all, [&](std::int64_t i) {
          const auto res = sausage_cover_run(r, cfg.seed, offset + i, o);
          auto rec = base(detail::group_label("r", r), i);
          rec.params = {{"r", r}, {"R", o.R}, {"dt", o.dt}, {"refine", o.refine}, {"h", o.h},
                        {"sausage_radius", o.sausage_radius}};
          if (res.status == RunStatus::ok)
            rec.outputs = {{"cover_time", res.cover_time}, {"N_r", res.excursions},
                           {"N_over_phi", static_cast<double>(res.excursions) / phi(r)}};
          rec.diagnostics = {{"status", to_string(res.status)}, {"steps", res.steps},
                             {"segments", res.segments}, {"time_exact", res.time_exact},
                             {"ledger_alternates", res.ledger_alternates}, {"stream_run", offset + i}};
          return rec;
        });
      }
      break;
    }
    case ExperimentKind::hitting: {
      const double rho = c.get_double("hitting.rho"), r = c.get_double("hitting.r"), P = c.get_double("hitting.P");
      HittingOptions opt;
      opt.symmetrized = c.get_bool("hitting.symmetrized");
      opt.workers = cfg.workers;
      opt.budget = cfg.budget;
      const auto samples = c.get_int("hitting.samples");
      const auto t0 = std::chrono::steady_clock::now();
      auto rec = base(c.get("hitting.target"), 0);
      rec.params = {{"target", c.get("hitting.target")}, {"r", r}, {"P", P}, {"samples", samples},
                    {"symmetrized", opt.symmetrized}};
      const LatticePoint start = axis_boundary_point(r);
      rec.params["start"] = {start.x, start.y};
      if (c.get("hitting.target") == "circle") {
        rec.params["rho"] = rho;
        const auto e = hitting_prob_estimate(rho, r, P, samples, cfg.seed, opt);
        rec.outputs = {{"estimate", e.value}, {"std_error", e.std_error},
                       {"leading_term", (std::log(P) - std::log(r)) / (std::log(P) - std::log(rho))}};
        rec.diagnostics = {{"budget_failures", e.budget_failures}};
        if (c.get_bool("hitting.exact")) {
          const auto x = exact_hit_prob(rho, r, P, start);
          rec.outputs["exact"] = x.value;
          rec.diagnostics["mean_value_residual"] = x.stats.mean_value_residual;
        }
      } else {
        const auto e = hit_origin_before(P, r, samples, cfg.seed, opt);
        rec.outputs = {{"estimate", e.estimate.value}, {"std_error", e.estimate.std_error}, {"bound", e.bound}};
        rec.diagnostics = {{"budget_failures", e.estimate.budget_failures}, {"meets_bound", e.meets_bound()}};
        if (c.get_bool("hitting.exact")) {
          const auto x = exact_origin_prob(P, start);
          rec.outputs["exact"] = x.value;
          rec.diagnostics["mean_value_residual"] = x.stats.mean_value_residual;
        }
      }
      rec.wall_ms = detail::elapsed_ms(t0);
      sink.append(rec);
      all.push_back(rec);
      break;
    }
    case ExperimentKind::exit_time: {
      const double r = c.get_double("exit.r"), eps = c.get_double("exit.eps");
      const auto n = c.get_int("exit.samples");
      const double lo = std::pow(r, 2.0 - eps), hi = std::pow(r, 2.0 + eps);
      if (c.get("exit.engine") == "lattice") {
        detail::run_indexed(n, cfg.workers, sink, all, [&](std::int64_t i) {
          const auto s = exit_time_run(r, cfg.seed, i);
          auto rec = base(detail::group_label("r", r), i);
          rec.params = {{"engine", "lattice"}, {"r", r}, {"eps", eps}};
          const auto z = static_cast<double>(s.zeta);
          rec.outputs = {{"zeta", s.zeta}, {"martingale", static_cast<double>(s.end_norm2) - z},
                         {"outside_window", (z <= lo || z >= hi) ? 1 : 0}};
          return rec;
        });
      } else {
        const double dt = c.get_double("exit.dt");
        const int refine = static_cast<int>(c.get_int("exit.refine"));
        detail::run_indexed(n, cfg.workers, sink, all, [&](std::int64_t i) {
          const double t = brownian_exit_time(r, dt, refine, cfg.seed, i);
          auto rec = base(detail::group_label("r", r), i);
          rec.params = {{"engine", "brownian"}, {"r", r}, {"eps", eps}, {"dt", dt}, {"refine", refine}};
          rec.outputs = {{"zeta", t}, {"outside_window", (t <= lo || t >= hi) ? 1 : 0}};
          return rec;
        });
      }
      break;
    }
    case ExperimentKind::iid_cover: {
      const double r = c.get_double("iid.r");
      const ExcursionContext ctx(r);
      const auto kind_s = c.get("iid.kind");
      const SetKind kind = kind_s == "C" ? SetKind::C : kind_s == "E" ? SetKind::E : SetKind::F;
      const auto trials = c.get_int("iid.trials");
      for (auto k : cfg.union_sizes()) {
        detail::run_indexed(trials, cfg.workers, sink, all, [&](std::int64_t i) {
          const auto u = run_union_process(ctx, k, kind, cfg.seed + static_cast<std::uint64_t>(k), i);
          auto rec = base(detail::group_label("k", static_cast<double>(k)), i);
          rec.params = {{"r", r}, {"k", k}, {"kind", kind_s}, {"k_over_phi", static_cast<double>(k) / phi(r)}};
          rec.outputs = {{"covered", u.covered ? 1 : 0}, {"uncovered", u.uncovered}};
          rec.diagnostics = {{"status", to_string(u.status)}};
          return rec;
        });
      }
      break;
    }
    case ExperimentKind::coupling: {
      const double r = c.get_double("coupling.r");
      CouplingOptions opt;
      opt.c1 = c.get("coupling.c1") == "auto" ? fitted_c1(r) : c.get_double("coupling.c1");
      opt.u = c.get_double("coupling.u");
      opt.force_zero_xi = c.get_bool("coupling.force_zero_xi");
      const ExcursionContext ctx(r);
      detail::run_indexed(c.get_int("coupling.runs"), cfg.workers, sink, all, [&](std::int64_t i) {
        const auto tr = coupled_cover_run(ctx, cfg.seed, i, opt);
        auto rec = base(detail::group_label("r", r), i);
        rec.params = {{"r", r}, {"c1", opt.c1}, {"u", opt.u}, {"force_zero_xi", opt.force_zero_xi}};
        rec.outputs = {{"xi_sum", tr.xi_sum}, {"xi_sum_gt_1", tr.xi_sum > 1 ? 1 : 0}, {"m_E", tr.m_e},
                       {"m_E_gt_a", tr.m_e_within_a ? 0 : 1}};
        if (tr.m_f) rec.outputs["m_F"] = *tr.m_f;
        rec.diagnostics = {{"a", tr.a_threshold}, {"alpha", tr.alpha}, {"a0_contained", tr.a0_contained},
                           {"censored", tr.censored}, {"status", to_string(tr.status)},
                           {"xi_draws", tr.xi.size()}, {"discrepancies", tr.discrepancies}};
        if (tr.m_f_within_a) rec.diagnostics["m_F_within_a"] = *tr.m_f_within_a;
        return rec;
      });
      break;
    }
    case ExperimentKind::torus_cover: {
      TorusOptions o;
      o.dt = c.get_double("torus.dt");
      const auto n = c.get_int("torus.samples");
      for (double eps : c.get_doubles("torus.eps")) {
        detail::run_indexed(n, cfg.workers, sink, all, [&](std::int64_t i) {
          const auto res = torus_cover_time(eps, cfg.seed, i, o);
          auto rec = base(detail::group_label("eps", eps), i);
          rec.params = {{"eps", eps}, {"dt", o.dt > 0.0 ? o.dt : eps * eps / 25.0}};
          if (res.status == RunStatus::ok)
            rec.outputs = {{"cover_time", res.cover_time}, {"normalized", res.normalized}};
          rec.diagnostics = {{"status", to_string(res.status)}, {"steps", res.steps}, {"targets", res.targets}};
          return rec;
        });
      }
      break;
    }
    case ExperimentKind::series_scan: {
      std::int64_t idx = 0;
      for (double l : c.get_doubles("series.lambda")) {
        const ScheduleParams s{l, c.get_double("series.alpha"), c.get_double("series.eps1"), c.get_double("series.eps2")};
        for (Side side : {Side::upper, Side::lower}) {
          const auto e = series_exponent(side, s);
          for (auto n : c.get_ints("series.n")) {
            auto rec = base(detail::group_label("lambda", l) + (side == Side::upper ? "/upper" : "/lower"), idx++);
            rec.params = {{"lambda", l}, {"alpha", s.alpha}, {"eps1", s.eps1}, {"eps2", s.eps2},
                          {"side", side == Side::upper ? "upper" : "lower"}, {"n", n}};
            rec.outputs = {{"exponent", e.exponent}, {"converges", e.converges ? 1 : 0}};
            try {
              const auto p = tilde_event_prob(n, s, side);
              const auto sens = tilde_event_sensitivity(n, s, side);
              rec.outputs["exact"] = p.exact;
              rec.outputs["surrogate"] = p.surrogate;
              rec.outputs["ratio"] = p.ratio;
              rec.diagnostics = {{"max_error_term", p.max_error_term()}, {"o1_spread", sens.spread()}};
            } catch (const DomainError& err) {
              rec.diagnostics = {{"domain_error", err.what()}};
            }
            sink.append(rec);
            all.push_back(rec);
          }
        }
      }
      break;
    }
    case ExperimentKind::lil_statistic: {
      const auto cps = geometric_checkpoints(c.get_int("lil.first"), c.get_int("lil.last"), c.get_double("lil.ratio"));
      const double extent = c.get_double("lil.extent");
      detail::run_indexed(c.get_int("lil.samples"), cfg.workers, sink, all, [&](std::int64_t i) {
        const auto path = cover_radius_path(extent, cps, cfg.seed, i);
        auto rec = base("extent=" + std::to_string(static_cast<long long>(extent)), i);
        rec.params = {{"extent", extent}, {"first", cps.front()}, {"last", cps.back()}};
        nlohmann::json ns = nlohmann::json::array(), rs = nlohmann::json::array(), sat = nlohmann::json::array();
        for (const auto& p : path) {
          ns.push_back(p.n);
          rs.push_back(p.radius);
          sat.push_back(p.saturated);
        }
        rec.outputs = {{"final_radius", path.back().radius}};
        rec.diagnostics = {{"n", ns}, {"R_n", rs}, {"saturated", sat}};
        return rec;
      });
      break;
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// LIL statistic. A trend exhibit only: the limsup is an infinite-time claim.

/// (log R)^2 / (log n log3 n); requires n > e^e.
inline double lil_statistic(double n, double radius) {
  if (!(std::log(n) > std::numbers::e)) throw DomainError("lil statistic needs n > e^e");
  if (!(radius >= 1.0)) throw DomainError("lil statistic needs R >= 1");
  const double lr = std::log(radius);
  return lr * lr / (std::log(n) * ilog3(n));
}

struct LilRow {
  std::int64_t run = 0;
  std::int64_t n = 0;
  double radius = 0.0;
  double statistic = 0.0;
  double running_max = 0.0;
};

/// Rows for every checkpoint with n > e^e, per run, with the running max.
inline std::vector<LilRow> lil_statistic_report(const std::vector<RunRecord>& records) {
  std::vector<LilRow> rows;
  for (const auto& rec : records) {
    if (!rec.diagnostics.contains("n") || !rec.diagnostics.contains("R_n")) continue;
    const auto& ns = rec.diagnostics["n"];
    const auto& rs = rec.diagnostics["R_n"];
    double best = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto n = ns[i].get<std::int64_t>();
      if (!(std::log(static_cast<double>(n)) > std::numbers::e)) continue;
      LilRow row;
      row.run = rec.run;
      row.n = n;
      row.radius = rs[i].get<double>();
      row.statistic = lil_statistic(static_cast<double>(n), row.radius);
      best = std::max(best, row.statistic);
      row.running_max = best;
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_lil_csv(std::ostream& out, const std::vector<LilRow>& rows) {
  out << "# trend exhibit, no pass/fail\nrun,n,R_n,statistic,running_max\n" << std::setprecision(12);
  for (const auto& r : rows)
    out << r.run << ',' << r.n << ',' << r.radius << ',' << r.statistic << ',' << r.running_max << '\n';
}

}  // namespace covlab
