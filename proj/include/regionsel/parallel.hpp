#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace regionsel {

// Worker count for the per-image / per-patch stages. Defaults to the
// REGIONSEL_JOBS environment variable, else the OpenMP default.
int jobs();
void set_jobs(int n);

// Runs body(i) for i in [0, n) across the worker pool. Each index writes only
// its own output slot, so results never depend on the thread count. The
// first exception (lowest index) is rethrown after the loop joins.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace regionsel
