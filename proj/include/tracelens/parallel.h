// Process-wide worker cap and a minimal parallel loop.
//
// Callers must keep results independent of the schedule: each index writes
// its own slot and reductions happen afterwards in index order.

#ifndef TRACELENS_PARALLEL_H_
#define TRACELENS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace tracelens {

// 0 restores the default (hardware concurrency).
void SetWorkerThreads(unsigned threads);
unsigned WorkerThreads();

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tracelens

#endif  // TRACELENS_PARALLEL_H_
