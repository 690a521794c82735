#pragma once

#include <cstddef>
#include <functional>

namespace voxedit {

/// Worker count used by rendering. Defaults to std::thread::hardware_concurrency(); 1 runs inline.
void set_num_threads(int n);
int num_threads();

/// Splits [0, n) into contiguous chunks, one per worker, and calls fn(begin, end, worker_index).
/// The split depends only on n and the worker count, so per-worker results reduced in worker order
/// are reproducible for a fixed thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn);

/// Number of workers parallel_for will use for a range of size n.
int worker_count(std::size_t n);

}  // namespace voxedit
