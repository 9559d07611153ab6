#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace grk {

// Deterministic chunked map-reduce: work is split into fixed-size chunks,
// each chunk produces its own accumulator, and accumulators merge in chunk
// order. The result is byte-identical for any worker count, so parallelism
// never changes output bytes.
//
// Acc must be default-constructible; chunk_fn(acc, begin, end, chunk_index)
// fills one chunk; merge_fn(into, from) combines two accumulators.
template <typename Acc, typename ChunkFn, typename MergeFn>
Acc chunked_map_reduce(std::size_t n_items, std::size_t chunk_size, ChunkFn chunk_fn,
                       MergeFn merge_fn, unsigned n_threads = 0) {
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  std::vector<Acc> partial(n_chunks);
  if (n_threads == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n_threads = hw ? hw : 1;
  }
  if (n_threads <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t b = c * chunk_size;
      const std::size_t e = std::min(n_items, b + chunk_size);
      chunk_fn(partial[c], b, e, c);
    }
  } else {
    std::vector<std::thread> pool;
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(n_threads, n_chunks));
    std::vector<std::exception_ptr> failures(n_chunks);
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (std::size_t c = w; c < n_chunks; c += workers) {
          const std::size_t b = c * chunk_size;
          const std::size_t e = std::min(n_items, b + chunk_size);
          try {
            chunk_fn(partial[c], b, e, c);
          } catch (...) {
            failures[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    // Rethrow the lowest-index failure so error reporting is deterministic.
    for (const auto& ep : failures)
      if (ep) std::rethrow_exception(ep);
  }
  Acc total{};
  for (std::size_t c = 0; c < n_chunks; ++c) merge_fn(total, partial[c]);
  return total;
}

}  // namespace grk
