#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace trirast {

/// Fixed set of persistent worker threads. `run` hands the same job to every
/// worker (the calling thread acts as worker 0) and returns once all of them
/// have finished, which gives the stage barrier.
class WorkerPool {
public:
    explicit WorkerPool(unsigned workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    unsigned size() const { return workerCount_; }

    /// Runs job(workerIndex) on every worker. Rethrows the first exception.
    void run(const std::function<void(unsigned)>& job);

    /// Worker count from TRIRAST_WORKERS, else hardware concurrency.
    static unsigned defaultWorkerCount();

private:
    void threadMain(unsigned index);

    unsigned workerCount_;
    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(unsigned)>* job_ = nullptr;
    uint64_t generation_ = 0;
    unsigned pending_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

}  // namespace trirast
