#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace affine_cdo {

/// Name of the environment variable that caps the number of worker threads.
inline constexpr const char* kWorkersEnv = "AFFINE_CDO_WORKERS";

/// Worker count from AFFINE_CDO_WORKERS, falling back to the hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to `workers` threads using a static block partition.
/// Each index is visited exactly once; callers write into pre-sized, index-addressed storage,
/// so results do not depend on the worker count. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t workers = 0);

}  // namespace affine_cdo
