#include "brw/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace brw {

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t resolve_thread_count(std::size_t requested)
{
    if (requested > 0) return requested;
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BRW_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return n;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    std::size_t failed_index = n;
    std::exception_ptr failure;
    std::mutex mutex;

    auto run_block = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
                return;
            }
        }
    };

    if (threads == 1) {
        run_block(0, n);
    } else {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            workers.emplace_back(run_block, begin, end);
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace brw
