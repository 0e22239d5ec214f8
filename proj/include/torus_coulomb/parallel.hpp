#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace torus_coulomb {

/// Worker cap: TORUS_COULOMB_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline int max_workers() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("TORUS_COULOMB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) return cap;
    } catch (const std::exception&) {
    }
  }
  return hw;
}

/// Run task(k) for k in [0, count) on up to `workers` threads. Tasks write
/// to disjoint outputs; any exception is rethrown on the calling thread.
template <class Task>
void parallel_tasks(int count, int workers, Task&& task) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace torus_coulomb
