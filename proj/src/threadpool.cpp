#include "mrulab/threadpool.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace mrulab {

struct ThreadPool::Impl {
    std::mutex mu;
    std::condition_variable cv_work;
    std::condition_variable cv_done;
    std::queue<std::function<void()>> tasks;
    bool stop = false;
    std::vector<std::thread> workers;

    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lk(mu);
                cv_work.wait(lk, [&] { return stop || !tasks.empty(); });
                if (stop && tasks.empty()) return;
                task = std::move(tasks.front());
                tasks.pop();
            }
            task();
        }
    }

    // Blocks until all n items have run. The calling thread helps drain the
    // queue, so nested batches issued from worker threads cannot deadlock.
    void run_batch(size_t n, const std::function<void(size_t)>& fn) {
        auto remaining = std::make_shared<std::atomic<size_t>>(n);
        {
            std::lock_guard<std::mutex> lk(mu);
            for (size_t i = 0; i < n; ++i) {
                tasks.push([this, i, &fn, remaining] {
                    fn(i);
                    if (remaining->fetch_sub(1) == 1) {
                        std::lock_guard<std::mutex> lk2(mu);
                        cv_done.notify_all();
                    }
                });
            }
        }
        cv_work.notify_all();
        while (remaining->load() != 0) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lk(mu);
                if (!tasks.empty()) {
                    task = std::move(tasks.front());
                    tasks.pop();
                } else {
                    if (remaining->load() == 0) break;
                    cv_done.wait_for(lk, std::chrono::milliseconds(1));
                    continue;
                }
            }
            task();
        }
    }
};

static size_t pool_size_from_env() {
    size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("MRULAB_THREADS")) {
        long v = std::atol(env);
        if (v >= 1 && static_cast<size_t>(v) < n) n = static_cast<size_t>(v);
    }
    return n;
}

ThreadPool::ThreadPool() : impl_(new Impl), n_workers_(pool_size_from_env()) {
    for (size_t i = 0; i < n_workers_; ++i) {
        impl_->workers.emplace_back([this] { impl_->worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lk(impl_->mu);
        impl_->stop = true;
    }
    impl_->cv_work.notify_all();
    for (auto& w : impl_->workers) w.join();
    delete impl_;
}

ThreadPool& ThreadPool::instance() {
    static ThreadPool pool;
    return pool;
}

void ThreadPool::parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    if (n == 1 || n_workers_ == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t ranges = std::min(n, n_workers_ * 4);
    size_t chunk = (n + ranges - 1) / ranges;
    ranges = (n + chunk - 1) / chunk;
    if (ranges <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    impl_->run_batch(ranges, [&](size_t r) {
        size_t lo = r * chunk;
        size_t hi = std::min(n, lo + chunk);
        for (size_t i = lo; i < hi; ++i) fn(i);
    });
}

void ThreadPool::parallel_shards(size_t shards, const std::function<void(size_t)>& fn) {
    if (shards == 0) return;
    if (shards == 1 || n_workers_ == 1) {
        for (size_t s = 0; s < shards; ++s) fn(s);
        return;
    }
    impl_->run_batch(shards, fn);
}

}  // namespace mrulab
