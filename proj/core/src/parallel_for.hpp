#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace leakprobe::detail {

inline unsigned effective_threads(unsigned requested, std::size_t n) {
  unsigned t = requested;
  if (t == 0) {
    t = std::thread::hardware_concurrency();
    if (t == 0) {
      t = 1;
    }
  }
  if (n < t) {
    t = static_cast<unsigned>(n);
  }
  return t == 0 ? 1 : t;
}

/// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware count).
/// Results must be written by index so the outcome is schedule-independent.
/// If several calls throw, the exception with the smallest index is
/// re-thrown, which keeps error reporting deterministic too.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned t = effective_threads(threads, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) {
        return;
      }
      {
        std::lock_guard lock(error_mutex);
        if (error && error_index < i) {
          return;  // an earlier item already failed
        }
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back(worker);
  }
  pool.clear();  // joins

  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace leakprobe::detail
