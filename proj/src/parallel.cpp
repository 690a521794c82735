#include "voxedit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace voxedit {

namespace {

int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::atomic<int> g_threads{default_threads()};

}  // namespace

void set_num_threads(int n) { g_threads = n <= 0 ? default_threads() : n; }
int num_threads() { return g_threads; }

int worker_count(std::size_t n) {
  if (n == 0) return 1;
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), n));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    fn(0, n, 0);
    return;
  }
  const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, chunk * static_cast<std::size_t>(w));
      const std::size_t end = std::min(n, begin + chunk);
      threads.emplace_back([&, begin, end, w] {
        try {
          fn(begin, end, w);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace voxedit
