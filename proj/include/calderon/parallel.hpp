#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace cald {

/// Worker count: CALDERON_THREADS if set, else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("CALDERON_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

/// Static block partition over [0, n). Each index is handled by exactly one
/// worker and results must be written to preallocated slots, so outputs are
/// bitwise independent of the worker count.
template <typename F>
void parallel_for(int n, F&& f) {
  const int nw = std::min(thread_count(), std::max(1, n));
  if (nw == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    const int lo = int(std::int64_t(n) * w / nw);
    const int hi = int(std::int64_t(n) * (w + 1) / nw);
    pool.emplace_back([lo, hi, &f] {
      for (int i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cald
