#pragma once

#include <cstddef>
#include <functional>

namespace famvote {

/// Caps worker threads used by parallel_for. 0 means hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n) over contiguous chunks. Calls made from inside
/// a worker run serially. Bodies must write only
/// to slots owned by i; results are then independent of the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace famvote
