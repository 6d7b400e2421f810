#pragma once

#include <cstddef>
#include <functional>

namespace ipgp {

/// Runs body(k) for k in [0, count) on up to `threads` workers. Work is
/// split into contiguous blocks; results must be written to per-index
/// slots so the outcome does not depend on scheduling. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ipgp
