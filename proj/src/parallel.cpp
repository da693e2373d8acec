#include "pcq/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace pcq {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() {
    return g_threads.load(std::memory_order_relaxed);
}

void set_thread_count(int n) {
    g_threads.store(std::max(1, n), std::memory_order_relaxed);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = std::min<std::int64_t>(thread_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }

    const std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers) - 1);
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto run = [&](std::int64_t begin, std::int64_t end) {
        try {
            fn(begin, end);
        } catch (...) {
            if (!failed.exchange(true)) {
                error = std::current_exception();
            }
        }
    };

    for (int w = 1; w < workers; ++w) {
        const std::int64_t begin = w * chunk;
        const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) break;
        threads.emplace_back(run, begin, end);
    }
    run(0, std::min<std::int64_t>(chunk, n));
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace pcq
