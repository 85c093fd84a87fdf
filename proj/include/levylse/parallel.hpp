#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace levylse {

/// Runs job(i) for i in [0, count) on up to `threads` workers. Results must be
/// keyed by i; the first exception is rethrown after all workers stop.
template <typename Job>
void parallel_for(std::size_t count, std::size_t threads, const Job& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < count && !failed; i = next++) job(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

/// Worker count from an explicit request, else LEVY_LSE_THREADS, else 1.
std::size_t resolve_threads(std::size_t requested);

}  // namespace levylse
