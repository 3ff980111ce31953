#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pabc {

// Static block partition of [0, n) over num_workers threads. Callers rely
// on results being a pure function of per-index inputs, so the partition
// never affects output.
template <typename Fn>
void parallel_for(std::size_t n, int num_workers, Fn&& fn) {
  if (num_workers <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(num_workers), n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : threads) t.join();
}

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace pabc
