#include "handtrack/worker_pool.hpp"

#include <algorithm>

#include "handtrack/errors.hpp"

namespace handtrack {
namespace {

std::pair<std::size_t, std::size_t> chunk(std::size_t n, unsigned parts, unsigned index) {
    const std::size_t base = n / parts, extra = n % parts;
    const std::size_t begin = index * base + std::min<std::size_t>(index, extra);
    return {begin, begin + base + (index < extra ? 1 : 0)};
}

} // namespace

WorkerPool::WorkerPool(unsigned workers) : workers_(workers) {
    if (workers == 0) throw InvalidInput("worker count must be at least 1");
    threads_.reserve(workers - 1);
    for (unsigned i = 1; i < workers; ++i) threads_.emplace_back([this, i] { worker_loop(i); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (workers_ == 1 || n < 2 * workers_) {
        if (n > 0) body(0, n);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        job_ = &body;
        job_size_ = n;
        pending_ = workers_ - 1;
        error_ = nullptr;
        ++generation_;
    }
    start_cv_.notify_all();

    std::exception_ptr local;
    try {
        const auto [b, e] = chunk(n, workers_, 0);
        body(b, e);
    } catch (...) {
        local = std::current_exception();
    }

    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (local) std::rethrow_exception(local);
    if (error_) std::rethrow_exception(error_);
}

void WorkerPool::worker_loop(unsigned index) {
    std::uint64_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t, std::size_t)>* job;
        std::size_t n;
        {
            std::unique_lock lock(mutex_);
            start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            job = job_;
            n = job_size_;
        }
        try {
            const auto [b, e] = chunk(n, workers_, index);
            if (b < e) (*job)(b, e);
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (--pending_ == 0) done_cv_.notify_one();
        }
    }
}

} // namespace handtrack
