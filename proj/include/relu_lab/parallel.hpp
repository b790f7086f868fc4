#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace relu_lab {

/// Worker-count cap: RELU_LAB_THREADS when set, hardware concurrency otherwise.
inline unsigned max_threads() {
  if (const char* env = std::getenv("RELU_LAB_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) return unsigned(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Static partition of [0, n) across workers. Results must be written to
/// pre-sized per-index slots so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  const unsigned workers = std::min<std::int64_t>(max_threads(), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&fn, t, workers, n] {
      for (std::int64_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace relu_lab
