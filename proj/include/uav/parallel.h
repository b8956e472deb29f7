#ifndef UAV_PARALLEL_H_
#define UAV_PARALLEL_H_

#include <functional>

namespace uav {

// Worker count used by ParallelFor. Zero means "all hardware threads".
// Initialized from UAV_THREADS when set.
void SetThreadCount(int threads);
int ThreadCount();

// Runs fn(i) for i in [0, n). Each index must write disjoint output so that
// results do not depend on how indices are partitioned.
void ParallelFor(int n, const std::function<void(int)>& fn);

}  // namespace uav

#endif  // UAV_PARALLEL_H_
