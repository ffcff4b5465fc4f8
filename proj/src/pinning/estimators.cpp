#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pinfield/pinning.hpp"

namespace pinfield {

namespace {

std::vector<Point> pinned_points(const PinChain& chain, const Region& lambda) {
  std::vector<Point> out;
  const auto& pins = chain.pinned();
  for (std::size_t i = 0; i < pins.size(); ++i) {
    if (pins[i]) out.push_back(lambda.site(i));
  }
  return out;
}

std::uint64_t mask_of(const Region& lambda, std::span<const Point> sites) {
  std::uint64_t m = 0;
  for (const auto& p : sites) {
    auto s = lambda.slot(p);
    if (!s) throw std::invalid_argument("site " + format_point(p, lambda.dim()) + " is not in Lambda");
    m |= std::uint64_t{1} << *s;
  }
  return m;
}

}  // namespace

EmptyProbability empty_probability(const Region& lambda, double epsilon, std::span<const Point> b,
                                   const SamplingPlan& plan, std::uint64_t seed, int jobs) {
  std::vector<std::size_t> slots;
  for (const auto& p : b) {
    auto s = lambda.slot(p);
    if (!s) throw std::invalid_argument("empty_probability: B must be a subset of Lambda");
    slots.push_back(*s);
  }
  EmptyProbability out;
  out.set_size = slots.size();
  const auto series = run_chains(lambda, epsilon, plan, seed, jobs, 1,
                                 [&](const PinChain& chain, std::size_t, std::size_t) {
                                   const auto& pins = chain.pinned();
                                   for (auto s : slots) {
                                     if (pins[s]) return std::vector<double>{0.0};
                                   }
                                   return std::vector<double>{1.0};
                                 });
  out.mc = estimate_batch_means(series[0], plan.batches, seed);
  if (lambda.alive_count() <= 16) {
    out.exact = exact_pin_measure(lambda, epsilon).empty_probability(mask_of(lambda, b));
  }
  return out;
}

std::vector<Estimate> covariance_profile(const Region& lambda, double epsilon, const Point& x,
                                         std::span<const Point> targets, const SamplingPlan& plan,
                                         std::uint64_t seed, int jobs) {
  if (!lambda.alive(x)) throw std::invalid_argument("covariance: site outside Lambda");
  for (const auto& y : targets) {
    if (!lambda.alive(y)) throw std::invalid_argument("covariance: site outside Lambda");
  }
  const std::size_t nt = targets.size();
  const auto series = run_chains(
      lambda, epsilon, plan, seed, jobs, nt, [&](const PinChain& chain, std::size_t, std::size_t) {
        std::vector<double> v(nt, 0.0);
        const Region alive = lambda.with_dead(pinned_points(chain, lambda));
        if (!alive.alive(x)) return v;
        KilledGreenSolver solver(alive);
        const auto col = solver.column(x);
        for (std::size_t t = 0; t < nt; ++t) {
          if (auto s = alive.slot(targets[t])) {
            v[t] = col.g(static_cast<Eigen::Index>(*s)) / lambda.beta_eff();
          }
        }
        return v;
      });
  std::vector<Estimate> out;
  for (std::size_t t = 0; t < nt; ++t) out.push_back(estimate_batch_means(series[t], plan.batches, seed));
  return out;
}

Estimate covariance(const Region& lambda, double epsilon, const Point& x, const Point& y,
                    const SamplingPlan& plan, std::uint64_t seed, int jobs) {
  const Point targets[] = {y};
  return covariance_profile(lambda, epsilon, x, targets, plan, seed, jobs).front();
}

Estimate variance_origin(const Region& lambda, double epsilon, const SamplingPlan& plan,
                         std::uint64_t seed, int jobs) {
  return covariance(lambda, epsilon, Point{}, Point{}, plan, seed, jobs);
}

Estimate variance_origin_naive(const Region& lambda, double epsilon, const SamplingPlan& plan,
                               std::uint64_t seed, int jobs) {
  if (!lambda.alive(Point{})) throw std::invalid_argument("variance_origin: origin outside Lambda");
  // Field draws use streams disjoint from the chain streams.
  const std::uint64_t field_seed = derive_seed(seed, 0xf1e1dULL);
  const std::size_t per_chain = plan.samples / plan.chains;
  const auto series = run_chains(
      lambda, epsilon, plan, seed, jobs, 1, [&](const PinChain& chain, std::size_t c, std::size_t t) {
        const auto f = sample_field(lambda, pinned_points(chain, lambda), field_seed, c * per_chain + t);
        const double v = f.at(Point{});
        return std::vector<double>{v * v};
      });
  return estimate_batch_means(series[0], plan.batches, seed);
}

std::vector<StabilityRow> box_stability(const StepKernel& k, double epsilon,
                                        std::span<const int> radii, StabilityProbe probe,
                                        const SamplingPlan& plan, std::uint64_t seed, int jobs) {
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (radii[i] <= radii[i - 1]) throw std::invalid_argument("box_stability: radii must be increasing");
  }
  std::vector<StabilityRow> rows;
  for (int r : radii) {
    if (r < 0) throw std::invalid_argument("box_stability: radii must be >= 0");
    const Region lambda = Region::centered_box(k, r);
    StabilityRow row;
    row.radius = r;
    row.sites = lambda.alive_count();
    const std::size_t origin = *lambda.slot(Point{});
    if (probe == StabilityProbe::origin_unpinned) {
      const auto series = run_chains(lambda, epsilon, plan, seed, jobs, 1,
                                     [&](const PinChain& chain, std::size_t, std::size_t) {
                                       return std::vector<double>{chain.pinned()[origin] ? 0.0 : 1.0};
                                     });
      row.value = estimate_batch_means(series[0], plan.batches, seed);
      if (lambda.alive_count() <= 16) {
        const auto t = exact_pin_measure(lambda, epsilon);
        const auto bit = static_cast<std::size_t>(
            std::find(t.window.begin(), t.window.end(), Point{}) - t.window.begin());
        row.exact = 1.0 - t.marginal(bit);
      }
    } else {
      row.value = variance_origin(lambda, epsilon, plan, seed, jobs);
      if (lambda.alive_count() <= 16) {
        row.exact = exact_pinned_covariance(PinEnumerator::full(lambda), epsilon, Point{}, Point{});
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<Point> segment_window(int dim, int distance, int w) {
  if (distance < 0 || w < 0) throw std::invalid_argument("segment_window: negative size");
  Point lo{}, hi{};
  for (int i = 0; i < dim; ++i) {
    lo[i] = -w;
    hi[i] = w;
  }
  hi[0] = distance + w;
  const Box b(dim, lo, hi);
  std::vector<Point> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.point(i));
  return out;
}

}  // namespace pinfield
