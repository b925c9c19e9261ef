#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace detfactors {

// Runs fn(0..n-1) on up to `workers` threads. Each index runs exactly once;
// callers write results into per-index slots so the schedule never affects
// output. The first exception thrown by any task is rethrown after all
// workers join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// SplitMix64 finalizer; used to derive independent RNG seeds from a base seed
// and stream coordinates.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace detfactors
