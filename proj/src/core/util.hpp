#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace qcl {

// Least-squares slope of log(y) against log(x); non-positive entries are rejected.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Worker count: QCL_THREADS when set (>= 1), otherwise the hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, count) on up to thread_count() threads. Each index
// is processed exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace qcl
