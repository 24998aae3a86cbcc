#ifndef ELLREACH_PARALLEL_HPP
#define ELLREACH_PARALLEL_HPP

#include <functional>

namespace ellreach {

/// Worker count: hardware concurrency capped by the ELLREACH_THREADS
/// environment variable (values < 1 are treated as 1).
int worker_count();

/// Runs fn(0..n-1) across workers with static index chunking. Workers write
/// only to their own slots, so results do not depend on the worker count.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace ellreach

#endif
