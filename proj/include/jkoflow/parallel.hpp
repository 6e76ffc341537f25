#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace jkoflow {

/// Worker cap shared by every parallel section. Defaults to the hardware
/// concurrency, or JKO_FLOW_JOBS when set.
std::size_t max_jobs();
void set_max_jobs(std::size_t jobs);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; nested
/// calls from inside a worker run serially. The
/// exception thrown by the lowest failing index is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace jkoflow
