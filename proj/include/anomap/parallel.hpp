#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstdint>
#include <thread>
#include <vector>

namespace anomap {

/// Worker count used by parallel_for: ANOMAP_THREADS if set to a positive
/// integer, hardware concurrency otherwise (at least 1).
inline unsigned thread_count() {
  static const unsigned n = [] {
    if (const char* env = std::getenv("ANOMAP_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1u;
  }();
  return n;
}

/// Runs fn(i) for i in [0, n). Each index is processed exactly once and
/// indices write disjoint outputs by contract, so the result is identical
/// to the sequential loop regardless of scheduling.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  const std::int64_t workers =
      std::min<std::int64_t>(static_cast<std::int64_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t lo = n * w / workers;
    const std::int64_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace anomap
