#pragma once

#include <cstddef>
#include <functional>

namespace topomesh {

// Worker cap from TOPOMESH_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
// Chunk boundaries depend only on (n, chunk_size), never on the worker count,
// so per-chunk accumulators can be reduced in chunk order deterministically.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace topomesh
