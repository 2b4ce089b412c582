#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace resteer {

// Global worker count used by measurement phases (sampling, inversion runs).
// Training loops stay single-threaded; parallel work items must be
// independent so results never depend on scheduling.
inline std::atomic<int>& thread_count_ref() {
  static std::atomic<int> n{std::max(1u, std::thread::hardware_concurrency())};
  return n;
}
inline void set_thread_count(int n) { thread_count_ref().store(std::max(1, n)); }
inline int thread_count() { return thread_count_ref().load(); }

inline void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  const int workers = std::max<int64_t>(1, std::min<int64_t>(thread_count(), n));
  if (workers == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      int64_t i;
      while ((i = next.fetch_add(1)) < n) {
        if (failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace resteer
