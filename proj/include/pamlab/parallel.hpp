#pragma once

#include <cstddef>
#include <functional>

namespace pamlab {

/// Worker count: PAMLAB_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on a pool of workers pulling indices from a
/// shared counter. Each index must write only to its own output slot; callers
/// reduce the slots in index order afterwards so results do not depend on the
/// worker count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pamlab
