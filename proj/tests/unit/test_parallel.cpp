#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "survgam/parallel.hpp"

using namespace survgam;

TEST_CASE("chunks cover the range exactly once") {
    for (int threads : {1, 3, 8}) {
        set_thread_count(threads);
        std::vector<std::atomic<int>> hits(10001);
        parallel_chunks(10001, 97, [&](Index, Index b, Index e) {
            for (Index i = b; i < e; ++i) hits[static_cast<std::size_t>(i)]++;
        });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    set_thread_count(0);
}

TEST_CASE("chunked sums are identical for any thread count") {
    auto sum = [] {
        return chunked_sum(100000, kChunkRows, 0.0, [](Index b, Index e) {
            double acc = 0.0;
            for (Index i = b; i < e; ++i) acc += std::sin(static_cast<double>(i)) / (1.0 + static_cast<double>(i));
            return acc;
        });
    };
    set_thread_count(1);
    const double one = sum();
    set_thread_count(7);
    const double seven = sum();
    set_thread_count(0);
    CHECK(one == seven);
}

TEST_CASE("exceptions from a chunk are rethrown") {
    set_thread_count(4);
    CHECK_THROWS_AS(parallel_chunks(1000, 10,
                                    [](Index c, Index, Index) {
                                        if (c == 37) throw std::runtime_error("boom");
                                    }),
                    std::runtime_error);
    set_thread_count(0);
    CHECK(thread_count() >= 1);
}
