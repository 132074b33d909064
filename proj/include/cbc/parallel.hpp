#pragma once

#include <cstddef>
#include <functional>

namespace cbc {

/// Worker count from CBC_WORKERS, else the hardware concurrency (at least 1).
std::size_t default_workers();

/// Calls fn(i) for i in [0, count) on up to `workers` threads (0 = default_workers()).
/// Items are claimed in order from a shared counter; the first exception is rethrown
/// after every worker has stopped.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace cbc
