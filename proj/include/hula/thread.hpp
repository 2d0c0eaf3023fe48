#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace hula {

/// Worker-thread budget. HULA_THREADS, when set to a positive integer, is the
/// cap; otherwise the hardware concurrency is used. Always at least 1. Read
/// per call so tests can change the cap within one process.
inline int worker_thread_count() {
  if (const char* env = std::getenv("HULA_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1)
      return static_cast<int>(std::min<long>(cap, 1024));
  }
  const unsigned int hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, count) across worker threads in contiguous
/// chunks. Items must be independent (distinct outputs, own RNG streams);
/// results are then identical for every thread count. Small workloads run
/// inline.
template <typename Fn>
void parallel_for(int count, Fn&& body) {
  const int threads = std::min(worker_thread_count(), count);
  if (threads <= 1 || count < 64) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  const int chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  for (int t = 1; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (int i = 0; i < std::min(chunk, count); ++i) body(i);
  for (auto& th : pool) th.join();
}

}  // namespace hula
