#ifndef MMDE_PARALLEL_HPP
#define MMDE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mmde {

// 0 -> hardware concurrency (at least 1)
unsigned resolve_threads(unsigned requested);

// Runs fn(begin, end) over a static partition of [0, n) on `threads` workers.
// Workers write to disjoint output slots chosen by index, so results never
// depend on the thread count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mmde

#endif  // MMDE_PARALLEL_HPP
