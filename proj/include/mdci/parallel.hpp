#pragma once

// Deterministic task-indexed parallel loop: results must be written by task
// index and randomness must come from per-task substreams, so the outcome is
// identical for any thread count.

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mdci {

inline void parallel_for(int n_threads, std::size_t n_tasks,
                         const std::function<void(std::size_t)>& fn) {
  if (n_threads <= 1 || n_tasks <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<std::size_t>(n_tasks, n_threads));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace mdci
