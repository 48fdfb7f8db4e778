#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dysonlab {

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
///
/// Work is split into contiguous index blocks; fn must only write to state
/// owned by index i. Results are therefore independent of the worker count.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(long n, int workers, Fn&& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<long>(n, 1024))));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace dysonlab
