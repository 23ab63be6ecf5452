#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace reachot {

enum class Reduction { deterministic, fast };

struct Execution {
  /// Worker cap; 0 means hardware concurrency.
  std::size_t threads = 1;
  Reduction reduction = Reduction::deterministic;

  std::size_t workers(std::size_t jobs) const {
    std::size_t t = threads == 0 ? std::max<std::size_t>(1, std::thread::hardware_concurrency()) : threads;
    return std::max<std::size_t>(1, std::min(t, jobs));
  }
};

/// Calls fn(i) for i in [0, n), split into contiguous chunks over at most
/// `exec.workers(n)` threads. The first exception thrown by any worker is
/// rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, const Execution& exec, Fn&& fn) {
  const std::size_t workers = exec.workers(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace reachot
