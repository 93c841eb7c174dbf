#pragma once

// Index-parallel map. Results are returned in index order, so output never
// depends on the number of workers or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace covlab {

template <class F>
auto parallel_map(std::int64_t n, int workers, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::int64_t>> {
  using T = std::invoke_result_t<F&, std::int64_t>;
  std::vector<std::optional<T>> slots(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[static_cast<std::size_t>(i)].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::int64_t>(n, 1))));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace covlab
