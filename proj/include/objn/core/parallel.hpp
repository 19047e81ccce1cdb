#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace objn {

// Process-wide worker bound, set once from the CLI --jobs flag.
inline int& job_count() {
  static int jobs = 1;
  return jobs;
}

// Fork-join loop over [0, n). Work is split into contiguous index ranges so
// that any per-item output written by index is independent of scheduling;
// callers must do cross-item reductions themselves, in index order, to stay
// deterministic.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  const int jobs = std::max(1, job_count());
  if (jobs == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, n));
  std::vector<std::thread> pool;
  std::atomic<std::int64_t> cursor{0};
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = cursor.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace objn
