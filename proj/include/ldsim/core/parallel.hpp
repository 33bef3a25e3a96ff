#pragma once

#include <cstddef>
#include <functional>

namespace ldsim {

// Runs body(i) for i in [0, n) on up to `workers` threads. Iterations must
// write only to their own output slots; the caller performs any reduction in
// index order afterwards, which keeps results independent of the worker count.
// If iterations throw, the exception from the lowest failing index is
// rethrown after all threads have joined.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t)>& body);

// Clamp a requested worker count to [1, n].
unsigned effective_workers(unsigned requested, std::size_t n);

}  // namespace ldsim
