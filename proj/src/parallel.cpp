#include "casekin/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace casekin {

namespace {

std::size_t read_thread_cap() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) {
    n = 1;
  }
  if (const char* env = std::getenv("CASEKIN_THREADS")) {
    const long cap = std::atol(env);
    if (cap >= 1 && static_cast<std::size_t>(cap) < n) {
      n = static_cast<std::size_t>(cap);
    }
  }
  return n;
}

thread_local bool inside_parallel_region = false;

}  // namespace

std::size_t max_threads() {
  static const std::size_t cap = read_thread_cap();
  return cap;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = inside_parallel_region ? 1 : std::min(max_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      inside_parallel_region = true;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) {
          break;
        }
        body(i);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

}  // namespace casekin
