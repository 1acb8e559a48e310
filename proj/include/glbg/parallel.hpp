#pragma once

#include <cstddef>
#include <functional>

namespace glbg {

// Runs work(i) for i in [0, n) on a pool of worker threads. Each index is an
// independent unit (its own NoiseStream); callers write results into slot i,
// so reductions never depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& work,
                  unsigned threads = 0);

unsigned default_threads();

}  // namespace glbg
