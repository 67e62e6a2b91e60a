#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace thermo {

/// Worker count for data-parallel kernels. Results never depend on it:
/// work is split into contiguous index chunks and every reduction happens
/// afterwards in index order.
struct Exec {
  unsigned threads = 1;
};

// Calls fn(begin, end) on disjoint chunks covering [0, n).
template <class Fn>
void parallel_chunks(std::size_t n, const Exec& exec, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(exec.threads, n / 1024 + 1));
  if (workers == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
}

}  // namespace thermo
