#pragma once

#include <cstddef>
#include <functional>

namespace ubsb {

/// Worker count used by `parallel_for`. Defaults to 1. Every parallel
/// region in the library writes results by index, so outputs never depend on
/// this value.
void set_thread_count(int threads);
int thread_count() noexcept;

/// Runs fn(i) for i in [0, n). Blocks until all calls return. Nested calls
/// from inside a worker run inline. The first exception thrown by any call is
/// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ubsb
