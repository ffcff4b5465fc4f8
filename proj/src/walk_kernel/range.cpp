#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_set>

#include "pinfield/walk_kernel.hpp"

namespace pinfield {

namespace {

constexpr std::size_t kBlock = 64;

std::size_t block_count(std::size_t reps) { return (reps + kBlock - 1) / kBlock; }

int visited_radius(long n, int reach) {
  const double typical = 6.0 * std::sqrt(static_cast<double>(n)) * reach;
  return static_cast<int>(std::min<double>(static_cast<double>(n) * reach, std::max(64.0, typical)));
}

}  // namespace

RangeSamples simulate_range(const StepKernel& k, long n, std::size_t reps, std::uint64_t seed,
                            int jobs) {
  if (n < 0) throw std::invalid_argument("simulate_range: n must be >= 0");
  if (reps < 1) throw std::invalid_argument("simulate_range: reps must be >= 1");
  RangeSamples out;
  out.samples.assign(reps, 0);
  const std::size_t blocks = block_count(reps);
  const std::size_t workers = worker_count(blocks, jobs);
  std::vector<std::unique_ptr<VisitedSet>> scratch(workers);
  const int radius = std::max(1, visited_radius(n, k.reach()));
  parallel_for(blocks, jobs, [&](std::size_t b, std::size_t w) {
    if (!scratch[w]) scratch[w] = std::make_unique<VisitedSet>(k.dim(), radius);
    VisitedSet& seen = *scratch[w];
    const std::size_t end = std::min(reps, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      Engine g = make_engine(seed, r);
      seen.clear();
      Point x{};
      seen.insert(x);
      for (long m = 0; m < n; ++m) {
        x = x + k.sample(g);
        seen.insert(x);
      }
      out.samples[r] = static_cast<long>(seen.size());
    }
  });
  Accumulator acc;
  for (long v : out.samples) acc.add(static_cast<double>(v));
  out.mean = acc.estimate(seed);
  return out;
}

TailEstimate range_tail(const StepKernel& k, long n, double kappa, std::size_t reps,
                        std::uint64_t seed, int jobs) {
  if (n < 3) throw std::invalid_argument("range_tail: n must be >= 3");
  if (!(kappa > 0.0)) throw std::invalid_argument("range_tail: kappa must be positive");
  TailEstimate t;
  t.threshold = kappa * static_cast<double>(n) / std::log(static_cast<double>(n));
  t.reps = reps;
  t.seed = seed;
  const auto rs = simulate_range(k, n, reps, seed, jobs);
  for (long v : rs.samples) {
    if (static_cast<double>(v) <= t.threshold) ++t.hits;
  }
  t.frequency = static_cast<double>(t.hits) / static_cast<double>(reps);
  t.upper_bound_95 = binomial_upper_bound(t.hits, reps, 0.95);
  return t;
}

std::vector<long> crossing_cells(const StepKernel& k, int n, int K, std::size_t reps,
                                 std::uint64_t seed, int jobs) {
  if (n < 1 || K < 1) throw std::invalid_argument("crossing_cells: n and K must be >= 1");
  if (reps < 1) throw std::invalid_argument("crossing_cells: reps must be >= 1");
  const int d = k.dim();
  const long half = static_cast<long>(n) * K;
  auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  std::vector<long> out(reps, 0);
  parallel_for(block_count(reps), jobs, [&](std::size_t b, std::size_t) {
    std::unordered_set<Point, PointHash> cells;
    const std::size_t end = std::min(reps, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      Engine g = make_engine(seed, r);
      cells.clear();
      Point x{};
      for (;;) {
        bool inside = true;
        for (int i = 0; i < d; ++i) {
          if (x[i] <= -half || x[i] > half) inside = false;
        }
        if (!inside) break;
        Point cell;
        for (int i = 0; i < d; ++i) cell[i] = static_cast<int>(floor_div(x[i] - 1, K));
        cells.insert(cell);
        x = x + k.sample(g);
      }
      out[r] = static_cast<long>(cells.size());
    }
  });
  return out;
}

}  // namespace pinfield
