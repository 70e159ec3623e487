#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace mf {

/// Worker count: hardware concurrency capped by the MF_THREADS environment
/// variable (values < 1 mean serial).
int worker_count();

/// Chunked parallel loop over [0, n); fn(i) must only write state owned by
/// index i. Runs serially when n is small or one worker is configured.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Deterministic pairwise summation; independent of worker count.
double pairwise_sum(std::span<const double> values);

}  // namespace mf
