// Acceptance runner: one PASS/FAIL line per criterion 1-12, full sizes.
// Exit status 0 when every criterion passes, 2 otherwise.

#include <CLI11.hpp>

#include <iostream>

#include "covlab/acceptance.hpp"

int main(int argc, char** argv) {
  covlab::acceptance::Options o;
  CLI::App app{"covlab acceptance criteria"};
  app.add_flag("--reduced", o.reduced, "criterion 4 at r in {30, 60} only");
  app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "master seed");
  CLI11_PARSE(app, argc, argv);
  bool ok = true;
  covlab::acceptance::run_all(o, [&](const covlab::acceptance::Result& r) {
    std::cout << covlab::acceptance::format_line(r) << std::endl;
    ok = ok && r.pass;
  });
  return ok ? 0 : 2;
}
