#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace fedrkg {

// Static chunking of [0, count) over the requested worker count. Results
// must be written to caller-owned, index-disjoint slots; with that rule
// the outcome is identical for any worker count.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  const std::size_t used = std::min(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < count; k += used) body(k);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace fedrkg
