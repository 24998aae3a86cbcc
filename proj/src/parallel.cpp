#include "ellreach/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ellreach {

int worker_count() {
    int n = int(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* cap = std::getenv("ELLREACH_THREADS")) {
        const int c = std::atoi(cap);
        if (c >= 1) n = std::min(n, c);
        else n = 1;
    }
    return n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int workers = std::min(worker_count(), n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto run_chunk = [&](int begin, int end) {
        try {
            for (int i = begin; i < end; ++i) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    const int chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) {
        const int begin = w * chunk;
        if (begin >= n) break;
        pool.emplace_back(run_chunk, begin, std::min(n, begin + chunk));
    }
    run_chunk(0, std::min(n, chunk));
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace ellreach
