#pragma once

#include <cstddef>
#include <functional>

namespace msvq::parallel {

/// Caps worker threads used by every parallel kernel. 0 restores the default
/// (hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) {
    return (n + chunk - 1) / chunk;
}

/// Calls fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
/// Chunk boundaries never depend on the thread count, so callers that reduce
/// per-chunk partials in chunk order get identical results on any machine.
void for_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace msvq::parallel
