#pragma once

#include <cstddef>
#include <functional>

namespace ephemera {

/// 0 means "all available cores".
unsigned resolve_threads(unsigned requested);

/// Runs `body(begin, end)` over [0, n) split into chunks of at most `grain`
/// items, on up to `threads` workers. Chunks are claimed dynamically, so
/// `body` must only write to disjoint per-index outputs. Exceptions thrown by
/// any worker are rethrown on the caller's thread.
void parallel_for(std::size_t n, unsigned threads, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ephemera
