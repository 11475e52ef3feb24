#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace biasforge {

// Worker count: explicit override if set, else BIASFORGE_THREADS, else the
// hardware concurrency. Always >= 1.
std::size_t worker_count();
void set_worker_count_override(std::size_t n);  // 0 clears the override

// Runs body(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
// depend only on n and chunk, never on the worker count, so any per-chunk
// reduction is scheduling independent. Exceptions from workers are rethrown.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& body);

// Pairwise summation in a fixed tree order.
double pairwise_sum(std::span<const double> xs);

// Element-wise pairwise reduction of equally sized vectors.
std::vector<double> pairwise_sum(const std::vector<std::vector<double>>& parts);

}  // namespace biasforge
