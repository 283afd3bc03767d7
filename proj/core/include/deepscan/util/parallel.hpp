#pragma once

#include <cstddef>
#include <functional>

namespace deepscan {

/// Caps worker fan-out for parallel_for. 0 restores the hardware default.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each,
/// possibly concurrently. Chunks are disjoint; the caller guarantees that
/// body writes only to state owned by its range.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace deepscan
