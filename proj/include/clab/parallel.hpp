#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace clab {

/// Worker-pool capability handed to estimators by the CLI. Work items are
/// claimed by index from an atomic cursor; callers must write results into
/// per-index slots so the outcome is independent of scheduling.
class Parallel {
  public:
    explicit Parallel(int workers) : workers_(workers < 1 ? 1 : workers) {}

    int workers() const { return workers_; }

    void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn) const {
        if (count == 0)
            return;
        if (workers_ == 1 || count == 1) {
            for (std::size_t i = 0; i < count; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto body = [&] {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    cursor.store(count);
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        int nthreads = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(workers_), count));
        threads.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t)
            threads.emplace_back(body);
        for (auto& t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

  private:
    int workers_;
};

} // namespace clab
