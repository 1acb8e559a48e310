#include "glbg/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace glbg {

unsigned default_threads() {
  if (const char* env = std::getenv("GLBG_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return static_cast<unsigned>(t);
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& work, unsigned threads) {
  if (threads == 0) threads = default_threads();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto loop = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  for (unsigned k = 0; k < t; ++k) pool.emplace_back(loop);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace glbg
