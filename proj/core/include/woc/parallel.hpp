#pragma once

#include <cstddef>
#include <functional>

namespace woc {

/// Number of worker threads used when a caller passes 0.
std::size_t default_thread_count() noexcept;

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Indices are handed out in contiguous chunks; callers write
/// results into per-index slots so the outcome is independent of scheduling.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace woc
