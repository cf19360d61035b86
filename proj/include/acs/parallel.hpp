#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace acs {

/// 0 means "all available cores".
inline unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, n_tasks) on up to `workers` threads. Tasks are
/// handed out dynamically; callers that need deterministic results write into
/// per-task slots and combine them in index order afterwards.
template <class Task>
void parallel_for(std::size_t n_tasks, unsigned workers, Task&& task) {
  const auto n_threads = static_cast<std::size_t>(
      std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n_tasks, 1)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_tasks);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(n_threads - 1);
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace acs
