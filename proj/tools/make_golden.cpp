// Regenerates tests/data/golden.txt from the exact solvers.
//   make_golden <path>

#include <iostream>

#include "covlab/annulus.hpp"
#include "covlab/srw.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_golden <path>\n";
    return 1;
  }
  using namespace covlab;
  GoldenTable t;
  const auto h = exact_hit_prob(8.0, 40.0, 200.0, axis_boundary_point(40.0));
  t.put("hit.8_40_200", h.value, h.stats.mean_value_residual);
  const auto s = exact_hit_prob(1.0, 2.0, 4.0, {3, 0});
  t.put("hit.1_2_4", s.value, s.stats.mean_value_residual);
  const auto b = biased_start_deviation(8.0, axis_start(wp(8.0)));
  t.put("biased.r8.deviation", b.max_relative_deviation, b.stats.mean_value_residual);
  t.put("biased.r8.c1", b.c1, b.stats.mean_value_residual);
  t.save(argv[1]);
  std::cout << "wrote " << t.size() << " entries to " << argv[1] << '\n';
}
