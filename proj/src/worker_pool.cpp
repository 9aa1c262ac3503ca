#include "trirast/worker_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace trirast {

WorkerPool::WorkerPool(unsigned workers) : workerCount_(std::max(1u, workers)) {
    threads_.reserve(workerCount_ - 1);
    for (unsigned i = 1; i < workerCount_; ++i) threads_.emplace_back([this, i] { threadMain(i); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::run(const std::function<void(unsigned)>& job) {
    {
        std::lock_guard lock(mutex_);
        job_ = &job;
        pending_ = workerCount_ - 1;
        error_ = nullptr;
        ++generation_;
    }
    wake_.notify_all();

    std::exception_ptr localError;
    try {
        job(0);
    } catch (...) {
        localError = std::current_exception();
    }

    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (localError) std::rethrow_exception(localError);
    if (error_) std::rethrow_exception(error_);
}

void WorkerPool::threadMain(unsigned index) {
    uint64_t seen = 0;
    for (;;) {
        const std::function<void(unsigned)>* job;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            job = job_;
        }
        try {
            (*job)(index);
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (--pending_ == 0) done_.notify_one();
        }
    }
}

unsigned WorkerPool::defaultWorkerCount() {
    if (const char* env = std::getenv("TRIRAST_WORKERS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace trirast
