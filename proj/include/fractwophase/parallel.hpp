#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace fractwophase {

/// Worker count: hardware concurrency, capped by FRACTWOPHASE_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fractwophase
