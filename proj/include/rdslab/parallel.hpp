#ifndef RDSLAB_PARALLEL_HPP
#define RDSLAB_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace rdslab {

// Worker count: RDSLAB_THREADS if set, otherwise hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n). Each index is executed exactly once; callers
// store results by index so the outcome is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rdslab

#endif
