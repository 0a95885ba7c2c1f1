#ifndef PVM_PARALLEL_H_
#define PVM_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pvm {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// runs exactly once; the first exception (by index) is rethrown after all
// workers finish.
template <typename Body>
void ParallelFor(std::size_t count, int threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(
      count, static_cast<std::size_t>(std::max(threads, 1)));
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  if (workers <= 1) {
    run(next);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] { run(next); });
    }
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

inline int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace pvm

#endif  // PVM_PARALLEL_H_
