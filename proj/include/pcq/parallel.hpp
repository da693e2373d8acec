#pragma once

#include <cstdint>
#include <functional>

namespace pcq {

// Global worker-thread setting, >= 1. Work is always split into the same
// per-item units regardless of the setting, so results are bit-identical
// across thread counts.
int thread_count();
void set_thread_count(int n);

// Runs fn(begin, end) over a contiguous partition of [0, n).
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace pcq
