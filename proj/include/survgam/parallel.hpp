#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace survgam {

using Index = Eigen::Index;

// Worker count for the engines' parallel regions. 0 restores the default
// (hardware concurrency).
void set_thread_count(int n);
int thread_count();

// Rows per chunk used by the engines. Chunk boundaries never depend on the
// thread count, so chunked reductions are reproducible for any thread count.
inline constexpr Index kChunkRows = 4096;

/**
 * Calls fn(chunk, begin, end) for every chunk [begin, end) of [0, n).
 * Chunks are handed out to worker threads; the first exception thrown by
 * any chunk is rethrown on the calling thread.
 */
void parallel_chunks(Index n, Index chunk, const std::function<void(Index, Index, Index)>& fn);

// Sum of f(begin, end) over chunks, reduced in chunk order.
template <class T, class F>
T chunked_sum(Index n, Index chunk, T zero, F&& f) {
    const Index n_chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
    std::vector<T> parts(static_cast<std::size_t>(n_chunks), zero);
    parallel_chunks(n, chunk, [&](Index c, Index b, Index e) { parts[static_cast<std::size_t>(c)] = f(b, e); });
    T total = zero;
    for (auto& p : parts) total += p;
    return total;
}

}  // namespace survgam
