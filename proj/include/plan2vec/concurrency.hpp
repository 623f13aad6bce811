#ifndef PLAN2VEC_CONCURRENCY_HPP
#define PLAN2VEC_CONCURRENCY_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace plan2vec {

// Runs fn(i) for i in [0, n). Each task must write only to its own output
// slot; results are then independent of the worker count, which keeps every
// parallel stage byte-deterministic.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min(workers, n);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace plan2vec

#endif
