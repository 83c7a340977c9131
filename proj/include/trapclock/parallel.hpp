#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace trapclock {

// Items per chunk. Chunk boundaries are part of the seed contract: every
// chunk starts from a fresh accumulator and chunk results are merged in
// index order, so the result does not depend on the worker count.
inline constexpr std::size_t kDefaultChunk = 64;

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// body(acc, i) folds item i into acc; merge(into, from) combines chunks.
template <class Acc, class Body, class Merge>
Acc deterministic_reduce(std::size_t n_items, unsigned workers, const Acc& init, Body&& body,
                         Merge&& merge, std::size_t chunk = kDefaultChunk) {
  if (n_items == 0) return init;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t n_chunks = (n_items + chunk - 1) / chunk;
  std::vector<Acc> partial(n_chunks, init);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(n_items, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(partial[c], i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  const unsigned n_threads =
      std::min<unsigned>(std::max(1u, workers), static_cast<unsigned>(n_chunks));
  if (n_threads <= 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);

  Acc out = init;
  for (const auto& p : partial) merge(out, p);
  return out;
}

}  // namespace trapclock
