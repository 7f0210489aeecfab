#pragma once

#include <cstddef>
#include <functional>

namespace histowas {

/// Worker count for data-parallel loops: min(hardware threads, the
/// HISTOWAS_THREADS environment variable when set). At least 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Items must be independent; each writes only
/// its own output slot, so results do not depend on the schedule. Exceptions
/// from items are rethrown (first by index) after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace histowas
