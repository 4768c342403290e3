#pragma once

#include <functional>

namespace wavectl {

/// Worker count used by parallel_for; 1 runs everything inline.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
/// results do not depend on the thread count. The first exception thrown by
/// any task is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace wavectl
