#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace fracdtn {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers must
/// ensure the iterations write to disjoint state (e.g. distinct matrix
/// columns); the output is then independent of the schedule.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fracdtn
