#pragma once

#include <cstddef>
#include <functional>

namespace dimer {

/// Worker count: $DIMER_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on a pool of worker threads. Work items must
/// write only to their own slot; the first exception thrown is rethrown here.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dimer
