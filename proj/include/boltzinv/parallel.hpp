#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace boltzinv {

/// Worker count: BOLTZINV_THREADS if set and positive, else the hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("BOLTZINV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(i) for i in [0, n) split into contiguous blocks. Each index is
/// handled by exactly one thread, so results written per index do not depend
/// on the thread count.
template <typename Body>
void parallel_for(Eigen::Index n, Body&& body) {
  const int workers = static_cast<int>(std::min<Eigen::Index>(thread_count(), std::max<Eigen::Index>(n / 64, 1)));
  if (workers <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  const Eigen::Index chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        const Eigen::Index hi = std::min(n, (t + 1) * chunk);
        for (Eigen::Index i = t * chunk; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace boltzinv
