#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>

namespace brw {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from (master, index).
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);
inline Rng make_stream(std::uint64_t master, std::uint64_t index)
{
    return Rng(stream_seed(master, index));
}

/// Worker count: `requested` if positive, otherwise hardware concurrency capped by BRW_THREADS.
std::size_t resolve_thread_count(std::size_t requested = 0);

/// Runs body(i) for i in [0, n) on up to `threads` workers, contiguous index blocks per worker.
/// Results must be written to per-index slots so the merge is independent of scheduling.
/// The exception thrown for the smallest failing index is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

} // namespace brw
