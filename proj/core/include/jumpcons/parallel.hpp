#pragma once

#include <cstddef>
#include <functional>

namespace jumpcons {

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency; 0 restores the default.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Results must be
/// written to per-index slots; callers reduce in index order afterwards so
/// the output does not depend on scheduling. The first exception thrown by
/// any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace jumpcons
