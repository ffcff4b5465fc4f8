#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace pinfield {

using Engine = std::mt19937_64;

/// Counter-based sub-seed: a splitmix64 mix of (master, stream). Every
/// replica or chain draws from its own stream, so results do not depend on
/// how work is scheduled.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
Engine make_engine(std::uint64_t master, std::uint64_t stream);

/// Uniform double in [0, 1).
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Calls body(task, worker) for every task in [0, count) on up to `jobs`
/// threads. Tasks must write only to their own output slots; worker is in
/// [0, jobs) and may index per-thread scratch space.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t task, std::size_t worker)>& body);

/// Number of worker threads parallel_for will use.
std::size_t worker_count(std::size_t count, int jobs);

}  // namespace pinfield
