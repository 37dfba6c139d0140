#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace kb {

/// Resolve a worker-count request: 0 means "use the hardware".
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Static range partition over [0, count). Each index is processed by
/// exactly one worker, so writes to per-index outputs are disjoint and
/// results do not depend on the worker count.
inline void parallel_for(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  workers = resolve_workers(workers);
  if (workers <= 1 || count <= 1) {
    body(0, count);
    return;
  }
  const unsigned used = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  std::vector<std::thread> pool;
  pool.reserve(used);
  const std::size_t chunk = (count + used - 1) / used;
  for (unsigned t = 0; t < used; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace kb
