#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace noma {

// Worker cap: NOMA_THREADS when set to a positive integer, else hardware
// concurrency. Always at least 1.
inline int max_threads() {
  if (const char* env = std::getenv("NOMA_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n) on up to max_threads() workers. fn must be safe
// to call concurrently for distinct i.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  int workers = std::min(max_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, n, workers] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace noma
