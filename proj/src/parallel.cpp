#include "survgam/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace survgam {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads = std::max(0, n); }

int thread_count() {
    const int n = g_threads.load();
    if (n > 0) return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_chunks(Index n, Index chunk, const std::function<void(Index, Index, Index)>& fn) {
    if (n <= 0) return;
    chunk = std::max<Index>(1, chunk);
    const Index n_chunks = (n + chunk - 1) / chunk;
    const int workers = static_cast<int>(std::min<Index>(thread_count(), n_chunks));
    auto run = [&](Index c) { fn(c, c * chunk, std::min(n, (c + 1) * chunk)); };
    if (workers <= 1) {
        for (Index c = 0; c < n_chunks; ++c) run(c);
        return;
    }

    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto loop = [&] {
        for (Index c = next++; c < n_chunks; c = next++) {
            try {
                run(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n_chunks;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(loop);
    loop();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace survgam
