#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace stview {

/// Static-chunked parallel loop. `fn(i)` must only write state owned by i, so
/// results do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t wkr = 0; wkr < workers; ++wkr) {
    const std::size_t lo = begin + wkr * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace stview
