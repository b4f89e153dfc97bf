#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mobnet {

// Worker count: MOBNET_WORKERS if set, else the request, else the hardware count.
inline int worker_count(int requested = 0) {
  if (const char* env = std::getenv("MOBNET_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Calls f(i) for i in [0, count) on a pool of workers. Results must be
// written to per-index slots; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, F&& f, int workers = 0) {
  const auto w = static_cast<std::size_t>(worker_count(workers));
  if (w <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t spawn = std::min(w, count);
  pool.reserve(spawn - 1);
  for (std::size_t k = 0; k + 1 < spawn; ++k) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mobnet
