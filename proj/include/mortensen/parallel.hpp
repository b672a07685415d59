#pragma once

#include <functional>

namespace mortensen {

// MORTENSEN_THREADS, clamped to >= 1; default 1.
int max_threads();

// Runs body(i) for i in [0, count) on up to max_threads() workers. Each index
// runs exactly once; results must be written to per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace mortensen
