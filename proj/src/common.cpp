#include "hdgfwi/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "hdgfwi/parallel.hpp"

#ifndef HDGFWI_VERSION
#define HDGFWI_VERSION "0.0.0"
#endif

namespace hdgfwi {

Complex complex_frequency(double frequency_hz, double laplace_shift) {
  if (laplace_shift < 0.0) {
    throw ConfigError("Laplace shift must be nonnegative, got " + std::to_string(laplace_shift));
  }
  return {-laplace_shift, 2.0 * kPi * frequency_hz};
}

const char* version_string() { return HDGFWI_VERSION; }

int worker_count() {
  if (const char* env = std::getenv("HDGFWI_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {
thread_local bool t_in_pool = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  // Nested calls run inline on the calling worker.
  if (workers <= 1 || t_in_pool) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    const bool was_in_pool = t_in_pool;
    t_in_pool = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    t_in_pool = was_in_pool;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hdgfwi
