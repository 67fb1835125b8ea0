#pragma once

#include <cstddef>
#include <functional>

namespace casekin {

//! Worker count: hardware concurrency, capped by the CASEKIN_THREADS
//! environment variable when set (a value of 1 forces serial execution).
std::size_t max_threads();

//! Runs body(i) for i in [0, n). Iterations must be independent; each writes
//! only its own output slot, so results do not depend on the worker count.
//! Nested calls run inline on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace casekin
