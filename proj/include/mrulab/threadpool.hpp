#pragma once

#include <cstddef>
#include <functional>

namespace mrulab {

// Shared worker pool. Size is min(hardware_concurrency, MRULAB_THREADS) and
// fixed for the lifetime of the process. All entry points block until the
// submitted work has finished, so callers never observe partial results.
class ThreadPool {
public:
    static ThreadPool& instance();

    size_t size() const { return n_workers_; }

    // Runs fn(i) for i in [0, n). Items are distributed as contiguous ranges;
    // each item must write only its own outputs.
    void parallel_for(size_t n, const std::function<void(size_t)>& fn);

    // Runs fn(shard) for shard in [0, shards). The shard count is chosen by
    // the caller, never by the pool, so reductions that sum per-shard buffers
    // in shard order give identical results for any worker count.
    void parallel_shards(size_t shards, const std::function<void(size_t)>& fn);

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

private:
    ThreadPool();
    ~ThreadPool();

    struct Impl;
    Impl* impl_;
    size_t n_workers_;
};

// Number of shards used for deterministic gradient/statistic reductions.
inline constexpr size_t kReduceShards = 16;

}  // namespace mrulab
