#pragma once

#include <cstddef>
#include <functional>

namespace jumpput {

/// Worker count: JUMPPUT_THREADS when set (>= 1), else hardware concurrency.
std::size_t thread_count();

/// Runs body(begin, end) over a static partition of [0, n). Partitioning only
/// decides who computes an index, so results written per index are independent
/// of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace jumpput
