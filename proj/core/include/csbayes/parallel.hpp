#pragma once

#include <cstddef>
#include <functional>

namespace csbayes {

/// Worker count from CSBAYES_WORKERS (default: hardware concurrency, min 1).
std::size_t worker_count();

/// Calls body(i) for i in [0, n). Each index is handled exactly once; callers
/// write into per-index slots and reduce afterwards in index order so the
/// result does not depend on scheduling. Exceptions from body are rethrown
/// (the one from the lowest failing index).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace csbayes
