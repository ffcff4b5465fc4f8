#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "pinfield/scaling.hpp"

namespace pinfield {

namespace {

constexpr std::size_t kBlock = 64;

std::size_t block_count(std::size_t reps) { return (reps + kBlock - 1) / kBlock; }

void check_inputs(const StepKernel& k, double p, std::size_t reps, const SausageOptions& opts,
                  bool allow_zero) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("trap density must lie in [0, 1]");
  if (p == 0.0 && !allow_zero && k.dim() <= 2)
    throw std::invalid_argument("trap density 0 diverges in d <= 2");
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (opts.n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  if (!(opts.weight_floor >= 0.0 && opts.weight_floor < 1.0))
    throw std::invalid_argument("weight_floor must lie in [0, 1)");
}

// Walks replica r of `seed` and calls visit(x, weight, n) at every time
// n <= n_max with the sausage weight (1-p)^{|X_[0,n]|}. visit returns false to
// stop the path. Paths do not depend on p, so equal seeds couple all p.
template <class Visit>
void walk_weighted(const StepKernel& k, double p, const SausageOptions& opts, std::uint64_t seed,
                   std::size_t r, VisitedSet& seen, Visit&& visit) {
  Engine g = make_engine(seed, r);
  seen.clear();
  Point x{};
  seen.insert(x);
  const double keep = 1.0 - p;
  double w = keep;
  if (!visit(x, w, 0L)) return;
  for (long n = 1; n <= opts.n_max; ++n) {
    if (w == 0.0 || w < opts.weight_floor) return;
    x = x + k.sample(g);
    if (seen.insert(x)) w *= keep;
    if (!visit(x, w, n)) return;
  }
}

template <class PerReplica>
SausageEstimate run_replicas(const StepKernel& k, double p, std::size_t reps, std::uint64_t seed,
                             const SausageOptions& opts, int jobs, PerReplica&& per_replica) {
  std::vector<double> values(reps, 0.0);
  const std::size_t blocks = block_count(reps);
  std::vector<std::unique_ptr<VisitedSet>> scratch(worker_count(blocks, jobs));
  parallel_for(blocks, jobs, [&](std::size_t b, std::size_t w) {
    if (!scratch[w])
      scratch[w] = std::make_unique<VisitedSet>(
          VisitedSet::for_walk(k.dim(), opts.n_max, k.reach()));
    const std::size_t end = std::min(reps, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) values[r] = per_replica(r, *scratch[w]);
  });
  SausageEstimate out;
  out.value = estimate_iid(values, seed);
  out.truncation_bound = truncation_bound(p, opts.n_max);
  out.truncated = out.truncation_bound > opts.truncation_tolerance;
  if (opts.keep_samples) out.samples = std::move(values);
  return out;
}

}  // namespace

double truncation_bound(double p, long n_max, double kappa) {
  if (n_max < 3) return 1.0;
  const double n = static_cast<double>(n_max);
  if (p >= 1.0) return 0.0;
  return std::exp(kappa * n / std::log(n) * std::log1p(-p));
}

SausageEstimate sausage_green(const StepKernel& k, double p, const Point& x, std::size_t reps,
                              std::uint64_t seed, const SausageOptions& opts, int jobs) {
  check_inputs(k, p, reps, opts, false);
  return run_replicas(k, p, reps, seed, opts, jobs, [&](std::size_t r, VisitedSet& seen) {
    double sum = 0.0;
    walk_weighted(k, p, opts, seed, r, seen, [&](const Point& y, double w, long) {
      if (y == x) sum += w;
      return true;
    });
    return sum;
  });
}

SausageEstimate survival_to_target(const StepKernel& k, double p, const Point& x,
                                   std::size_t reps, std::uint64_t seed,
                                   const SausageOptions& opts, int jobs) {
  if (is_origin(x)) throw std::invalid_argument("survival_to_target: target must differ from 0");
  check_inputs(k, p, reps, opts, true);
  return run_replicas(k, p, reps, seed, opts, jobs, [&](std::size_t r, VisitedSet& seen) {
    double hit = 0.0;
    walk_weighted(k, p, opts, seed, r, seen, [&](const Point& y, double w, long) {
      if (y == x) {
        hit = w;
        return false;
      }
      return true;
    });
    return hit;
  });
}

namespace {

// Runs the replicas and accumulates deposit(y, w, row) into per-distance bins.
template <class Deposit>
MassCurve binned_curve(const StepKernel& k, double p, int r_max, std::size_t reps,
                       std::uint64_t seed, const SausageOptions& opts, int jobs,
                       Deposit&& deposit) {
  check_inputs(k, p, reps, opts, false);
  if (r_max < 1) throw std::invalid_argument("mass curve: r_max must be >= 1");
  const std::size_t bins = static_cast<std::size_t>(r_max) + 1;
  const std::size_t blocks = block_count(reps);
  // Per-block sums keep the merge order fixed whatever the thread count.
  std::vector<std::vector<Accumulator>> block_acc(blocks, std::vector<Accumulator>(bins));
  std::vector<std::unique_ptr<VisitedSet>> scratch(worker_count(blocks, jobs));
  parallel_for(blocks, jobs, [&](std::size_t b, std::size_t wk) {
    if (!scratch[wk])
      scratch[wk] = std::make_unique<VisitedSet>(
          VisitedSet::for_walk(k.dim(), opts.n_max, k.reach()));
    std::vector<double> row(bins);
    const std::size_t end = std::min(reps, (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      std::fill(row.begin(), row.end(), 0.0);
      walk_weighted(k, p, opts, seed, r, *scratch[wk], [&](const Point& y, double w, long) {
        deposit(y, w, row);
        return true;
      });
      for (std::size_t i = 0; i < bins; ++i) block_acc[b][i].add(row[i]);
    }
  });
  MassCurve c;
  for (std::size_t i = 0; i < bins; ++i) {
    Accumulator acc;
    for (const auto& blk : block_acc) acc.merge(blk[i]);
    c.r.push_back(static_cast<double>(i));
    c.value.push_back(acc.mean());
    c.error.push_back(acc.std_error());
  }
  return c;
}

}  // namespace

MassCurve sausage_axis_curve(const StepKernel& k, double p, int r_max, std::size_t reps,
                             std::uint64_t seed, const SausageOptions& opts, int jobs) {
  const int d = k.dim();
  const double share = 1.0 / (2.0 * d);
  return binned_curve(k, p, r_max, reps, seed, opts, jobs,
                      [&](const Point& y, double w, std::vector<double>& row) {
                        int axis = -1;
                        for (int i = 0; i < d; ++i) {
                          if (y[i] == 0) continue;
                          if (axis >= 0) return;
                          axis = i;
                        }
                        if (axis < 0) {
                          row[0] += w;
                          return;
                        }
                        const auto dist = static_cast<std::size_t>(std::abs(y[axis]));
                        if (dist < row.size()) row[dist] += share * w;
                      });
}

MassCurve sausage_slab_curve(const StepKernel& k, double p, int r_max, std::size_t reps,
                             std::uint64_t seed, const SausageOptions& opts, int jobs) {
  const int d = k.dim();
  const double share = 1.0 / d;
  return binned_curve(k, p, r_max, reps, seed, opts, jobs,
                      [&](const Point& y, double w, std::vector<double>& row) {
                        for (int i = 0; i < d; ++i) {
                          const auto dist = static_cast<std::size_t>(std::abs(y[i]));
                          if (dist < row.size()) row[dist] += share * w;
                        }
                      });
}

}  // namespace pinfield
