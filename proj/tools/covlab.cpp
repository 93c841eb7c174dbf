// covlab command-line driver.
//
//   covlab simulate srw-cover|sausage-cover|iid-cover|coupling|torus-cover|lil-statistic
//   covlab estimate hitting|exit-time
//   covlab calc series-scan
//   covlab report lil [--records FILE]
//   covlab verify all
//
// Exit codes: 0 success, 1 configuration error, 2 acceptance failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "covlab/acceptance.hpp"
#include "covlab/config.hpp"
#include "covlab/experiments.hpp"
#include "covlab/records.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
  std::int64_t budget = 0;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "flat key=value config file");
  app->add_option("--seed", f.seed, "master seed (overrides config)");
  app->add_option("--workers", f.workers, "worker threads (overrides config)");
  app->add_option("--out", f.out, "record file; the summary goes to <out>.summary.csv");
  app->add_option("--budget-steps", f.budget, "per-run step cap (overrides config)");
  app->add_option("--set", f.sets, "extra key=value assignments, applied last");
}

std::string keys_help() {
  std::ostringstream s;
  s << "\nConfig keys (default in brackets):\n";
  for (const auto& k : covlab::documented_keys())
    s << "  " << k.key << " [" << k.fallback << "]  " << k.help << '\n';
  return s.str();
}

covlab::ExperimentConfig build_config(const CommonFlags& f, const std::string& experiment) {
  covlab::Config c = f.config.empty() ? covlab::Config{} : covlab::Config::load(f.config);
  if (!experiment.empty()) {
    if (c.has("experiment") && c.get("experiment") != experiment)
      throw covlab::ConfigError("config says experiment=" + c.get("experiment") + " but command runs " + experiment);
    c.set("experiment", experiment);
  }
  if (f.seed) c.set("seed", std::to_string(f.seed));
  if (f.workers) c.set("workers", std::to_string(f.workers));
  if (!f.out.empty()) c.set("out", f.out);
  if (f.budget) c.set("budget.steps", std::to_string(f.budget));
  for (const auto& kv : f.sets) c.set_assignment(kv);
  return covlab::ExperimentConfig::from(c);
}

int run(const CommonFlags& f, const std::string& experiment) {
  const auto cfg = build_config(f, experiment);
  std::unique_ptr<std::ofstream> out;
  if (!cfg.out.empty()) {
    out = std::make_unique<std::ofstream>(cfg.out);
    if (!*out) throw covlab::ConfigError("cannot write " + cfg.out);
  }
  covlab::RecordAppender sink(out.get());
  const auto records = covlab::run_experiment(cfg, sink);
  const auto rows = covlab::summarize(records);
  covlab::write_summary_csv(std::cout, rows);
  if (out) {
    std::ofstream csv(cfg.out + ".summary.csv");
    covlab::write_summary_csv(csv, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for excursion counts and cover times of planar random walk and Brownian motion"};
  app.footer(keys_help());
  app.require_subcommand(1);

  CommonFlags flags;
  std::string kind;

  auto* simulate = app.add_subcommand("simulate", "run a simulation experiment");
  simulate->add_option("kind", kind, "srw-cover | sausage-cover | iid-cover | coupling | torus-cover | lil-statistic")
      ->required()
      ->check(CLI::IsMember({"srw-cover", "sausage-cover", "iid-cover", "coupling", "torus-cover", "lil-statistic"}));
  add_common(simulate, flags);

  auto* estimate = app.add_subcommand("estimate", "estimate a hitting probability or exit time");
  estimate->add_option("kind", kind, "hitting | exit-time")->required()->check(CLI::IsMember({"hitting", "exit-time"}));
  add_common(estimate, flags);

  auto* calc = app.add_subcommand("calc", "exact series computations");
  calc->add_option("kind", kind, "series-scan")->required()->check(CLI::IsMember({"series-scan"}));
  add_common(calc, flags);

  std::string records_path;
  auto* report = app.add_subcommand("report", "LIL statistic table (trend exhibit)");
  report->add_option("kind", kind, "lil")->required()->check(CLI::IsMember({"lil"}));
  report->add_option("--records", records_path, "lil-statistic records to report on (otherwise run the experiment)");
  add_common(report, flags);

  bool full = false;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("kind", kind, "all")->required()->check(CLI::IsMember({"all"}));
  verify->add_flag("--full", full, "criterion 4 at r = 30, 60, 120 (default 30, 60)");
  add_common(verify, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed() || estimate->parsed() || calc->parsed()) return run(flags, kind);

    if (report->parsed()) {
      std::vector<covlab::RunRecord> records;
      if (!records_path.empty()) {
        std::ifstream in(records_path);
        if (!in) throw covlab::ConfigError("cannot read " + records_path);
        records = covlab::read_records(in);
      } else {
        const auto cfg = build_config(flags, "lil-statistic");
        std::unique_ptr<std::ofstream> out;
        if (!cfg.out.empty()) out = std::make_unique<std::ofstream>(cfg.out);
        covlab::RecordAppender sink(out.get());
        records = covlab::run_experiment(cfg, sink);
      }
      covlab::write_lil_csv(std::cout, covlab::lil_statistic_report(records));
      return 0;
    }

    if (verify->parsed()) {
      covlab::acceptance::Options o;
      if (flags.seed) o.seed = flags.seed;
      if (flags.workers) o.workers = flags.workers;
      o.reduced = !full;
      bool ok = true;
      covlab::acceptance::run_all(o, [&](const covlab::acceptance::Result& r) {
        std::cout << covlab::acceptance::format_line(r) << std::endl;
        ok = ok && r.pass;
      });
      return ok ? 0 : 2;
    }
  } catch (const covlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const covlab::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
