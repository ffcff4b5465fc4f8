#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles/dense.hpp"
#include "pinfield/errors.hpp"
#include "pinfield/pinning.hpp"

using namespace pinfield;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

Region singleton(const StepKernel& k) { return Region(k, Box(2, Point{}, Point{})); }

std::vector<Point> subset(const std::vector<Point>& sites, std::uint64_t mask) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (mask >> i & 1U) out.push_back(sites[i]);
  }
  return out;
}

/// Subset mask of the chain's pins in the table's window order.
std::uint64_t window_mask(const PinChain& c, const Region& lambda, const ExactPinTable& t) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < t.window.size(); ++i) {
    if (c.pinned()[*lambda.slot(t.window[i])]) m |= std::uint64_t{1} << i;
  }
  return m;
}

}  // namespace

TEST_SUITE("pinning") {
  TEST_CASE("one-site closed forms") {
    const auto k = simple_random_walk(2);
    const Region r = singleton(k);
    for (double eps : {0.1, 1.0, 7.0}) {
      const auto t = exact_pin_measure(r, eps);
      CHECK(t.marginal(0) == doctest::Approx(eps / (eps + kSqrt2Pi)).epsilon(1e-12));
      CHECK(gibbs_pin_prob(r, {}, Point{}, eps) == doctest::Approx(eps / (eps + kSqrt2Pi)).epsilon(1e-12));
      CHECK(exact_pinned_covariance(PinEnumerator::full(r), eps, Point{}, Point{}) ==
            doctest::Approx(kSqrt2Pi / (eps + kSqrt2Pi)).epsilon(1e-12));
    }
    CHECK(gibbs_pin_prob(r, {}, Point{}, 1.0) == doctest::Approx(0.28525).epsilon(1e-4));
    CHECK(gibbs_pin_prob(r, {}, Point{}, 0.0) == 0.0);
  }

  TEST_CASE("exact table matches brute-force determinants") {
    for (const auto& k : {simple_random_walk(2), simple_random_walk(2, true)}) {
      const Region r(k, Box::corner(2, 3));
      for (double eps : {0.1, 0.5, 3.0}) {
        const auto t = exact_pin_measure(r, eps);
        const auto brute = oracle::pin_law(k, t.window, eps);
        REQUIRE(t.size() == 512);
        double total = 0.0;
        for (std::size_t m = 0; m < t.size(); ++m) {
          CHECK(t.probability[m] > 0.0);
          CHECK(std::abs(t.probability[m] - brute[m]) <= 1e-12);
          total += t.probability[m];
        }
        CHECK(std::abs(total - 1.0) <= 1e-10);
      }
    }
  }

  TEST_CASE("restricted window integrates the rest out") {
    // Window = part of Lambda: marginals agree with the full table summed over
    // subsets that leave the outside sites unpinned, renormalized.
    const auto k = simple_random_walk(2, true);
    const Region r(k, Box::corner(2, 3));
    const std::vector<Point> w{make_point({0, 0}), make_point({1, 1}), make_point({2, 1})};
    const PinEnumerator e(r, w);
    const auto part = e.table(0.4);
    const auto full = exact_pin_measure(r, 0.4);
    std::vector<double> expect(8, 0.0);
    double z = 0.0;
    for (std::uint64_t m = 0; m < full.size(); ++m) {
      std::uint64_t sub = 0;
      bool outside = false;
      for (std::size_t i = 0; i < full.window.size(); ++i) {
        if (!(m >> i & 1U)) continue;
        const auto it = std::find(w.begin(), w.end(), full.window[i]);
        if (it == w.end()) {
          outside = true;
        } else {
          sub |= std::uint64_t{1} << (it - w.begin());
        }
      }
      if (outside) continue;
      expect[sub] += full.probability[m];
      z += full.probability[m];
    }
    for (std::size_t s = 0; s < 8; ++s) CHECK(part.probability[s] == doctest::Approx(expect[s] / z).epsilon(1e-10));
  }

  TEST_CASE("large epsilon concentrates on the full set") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 1);
    const auto t = exact_pin_measure(r, 1e6);
    CHECK(t.probability.back() >= 0.99);
    const auto s = sample_pins(r, 1e6, 100, 1);
    CHECK(s.pin_count() == 9);
    CHECK(s.alive_region().alive_count() == 0);
  }

  TEST_CASE("single-flip identity") {
    for (const auto& k : {simple_random_walk(2), simple_random_walk(2, true)}) {
      const Region r(k, Box::corner(2, 3));
      const double eps = 0.7;
      const auto t = exact_pin_measure(r, eps);
      for (std::uint64_t a = 0; a < t.size(); a += 7) {
        for (std::size_t i = 0; i < t.window.size(); ++i) {
          if (a >> i & 1U) continue;
          const auto pins = subset(t.window, a);
          const double ratio = t.probability[a | (std::uint64_t{1} << i)] / t.probability[a];
          CHECK(std::abs(ratio / (eps * gibbs_density_factor(r, pins, t.window[i])) - 1.0) <= 1e-10);
          const double p = gibbs_pin_prob(r, pins, t.window[i], eps);
          CHECK(p == doctest::Approx(ratio / (1.0 + ratio)).epsilon(1e-10));
        }
      }
    }
  }

  TEST_CASE("pin probability is uniformly of order epsilon") {
    // sigma^2 >= 1 / (beta_eff (1 - p(0))) for every A, so the conditional pin
    // probability stays below eps (2 pi / (beta_eff (1 - p(0))))^{-1/2}.
    for (const auto& k : {simple_random_walk(2), simple_random_walk(2, true)}) {
      const Region r(k, Box::corner(2, 3));
      const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi / (k.beta_eff() * (1.0 - k.origin_mass())));
      for (double eps : {0.01, 0.1, 1.0}) {
        for (std::uint64_t a = 0; a < 512; a += 5) {
          const auto pins = subset(r.alive_sites(), a);
          for (const auto& x : r.alive_sites()) CHECK(gibbs_pin_prob(r, pins, x, eps) <= c * eps);
        }
      }
    }
  }

  TEST_CASE("pin probability falls as pins recede") {
    const auto k = simple_random_walk(2);
    const Region r = Region::centered_box(k, 4);
    double prev = 1.0;
    for (int d : {1, 2, 3, 4}) {
      const std::vector<Point> pin{make_point({d, 0})};
      const double p = gibbs_pin_prob(r, pin, Point{}, 0.5);
      CHECK(p < prev);
      prev = p;
    }
  }

  TEST_CASE("heat-bath chain reproduces the exact law on a 2x2 box") {
    const auto k = simple_random_walk(2, true);
    const Region r(k, Box::corner(2, 2));
    const auto t = exact_pin_measure(r, 0.5);
    PinChain c(r, 0.5, 42, 0);
    for (int i = 0; i < 500; ++i) c.sweep();
    std::vector<double> freq(t.size(), 0.0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      c.sweep();
      freq[window_mask(c, r, t)] += 1.0 / n;
    }
    double tv = 0.0;
    for (std::size_t m = 0; m < t.size(); ++m) tv += 0.5 * std::abs(freq[m] - t.probability[m]);
    CHECK(tv <= 0.02);
    CHECK(c.sweeps() == 500 + n);
  }

  TEST_CASE("collapsed and augmented samplers agree on marginals") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 1);
    const auto t = exact_pin_measure(r, 0.5);
    for (auto kind : {SamplerKind::collapsed, SamplerKind::augmented}) {
      SamplingPlan plan;
      plan.samples = 20000;
      plan.chains = 2;
      plan.chain.kind = kind;
      const auto series = run_chains(r, 0.5, plan, 7, 1, t.window.size(),
                                     [&](const PinChain& c, std::size_t, std::size_t) {
                                       std::vector<double> v;
                                       for (const auto& p : t.window) v.push_back(c.pinned()[*r.slot(p)]);
                                       return v;
                                     });
      for (std::size_t i = 0; i < t.window.size(); ++i) {
        const auto e = estimate_batch_means(series[i], plan.batches, 7);
        CHECK(std::abs(e.mean - t.marginal(i)) <= 3.0 * e.std_error + 1e-3);
      }
    }
  }

  TEST_CASE("chains are deterministic and corner marginals symmetric") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 1);
    const auto a = sample_pins(r, 0.5, 50, 3);
    const auto b = sample_pins(r, 0.5, 50, 3);
    CHECK(a.pinned == b.pinned);
    const auto t = exact_pin_measure(r, 0.5);
    std::vector<double> corners;
    for (std::size_t i = 0; i < t.window.size(); ++i) {
      if (std::abs(t.window[i][0]) == 1 && std::abs(t.window[i][1]) == 1) corners.push_back(t.marginal(i));
    }
    REQUIRE(corners.size() == 4);
    for (double v : corners) CHECK(v == doctest::Approx(corners[0]).epsilon(1e-10));
  }

  TEST_CASE("windowed solves are audited") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 10);
    ChainOptions o;
    o.kind = SamplerKind::collapsed;
    o.window_radius = 7;
    PinChain c(r, 0.3, 5, 0, o);
    for (int i = 0; i < 5; ++i) c.sweep();
    CHECK(c.audits() > 0);
    CHECK(c.audit_max_error() <= 0.01);
    // A window this small misses more than 1% of the variance and is refused.
    o.window_radius = 3;
    CHECK_THROWS([&] {
      PinChain bad(r, 0.3, 5, 0, o);
      for (int i = 0; i < 5; ++i) bad.sweep();
    }());
  }

  TEST_CASE("field draws") {
    const auto k = simple_random_walk(2);
    const Region r = Region::centered_box(k, 1);
    const auto all = sample_field(r, r.alive_sites(), 1);
    for (double v : all.phi) CHECK(v == 0.0);
    // Singleton: unit variance.
    Accumulator acc;
    for (std::uint64_t i = 0; i < 100000; ++i) {
      const double v = sample_field(singleton(k), {}, 2, i).at(Point{});
      acc.add(v * v);
    }
    CHECK(std::abs(acc.mean() - 1.0) <= 3.0 * acc.std_error());
    // Pinned sites are exactly zero.
    const std::vector<Point> pins{make_point({1, 0}), make_point({0, -1})};
    const auto f = sample_field(r, pins, 3);
    for (const auto& p : pins) CHECK(f.at(p) == 0.0);
    CHECK(f.at(make_point({5, 5})) == 0.0);
  }

  TEST_CASE("field covariance on a 5x5 box") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 2);
    GaussianFieldSampler s(r);
    auto g = make_engine(17, 0);
    const std::size_t n = r.alive_count();
    const auto o = static_cast<Eigen::Index>(*r.slot(Point{}));
    std::vector<Accumulator> acc(n);
    for (int t = 0; t < 40000; ++t) {
      const auto v = s.draw(g);
      for (std::size_t i = 0; i < n; ++i) acc[i].add(v(o) * v(static_cast<Eigen::Index>(i)));
    }
    KilledGreenSolver solver(r);
    const auto col = solver.column(Point{});
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = col.g(static_cast<Eigen::Index>(i)) / k.beta_eff();
      CHECK(std::abs(acc[i].mean() - exact) <= 3.0 * acc[i].std_error());
    }
  }

  TEST_CASE("lattice condition") {
    const auto k = simple_random_walk(2, true);
    for (double eps : {0.5, 10.0}) {
      const auto c = check_lattice_condition(Region(k, Box::corner(2, 2)), eps);
      CHECK(c.min_ratio >= 1.0 - 1e-10);
      CHECK(c.pairs == 256);
    }
    const auto c3 = check_lattice_condition(Region(k, Box::corner(2, 3)), 1.0);
    CHECK(c3.min_ratio >= 1.0 - 1e-10);
    // Comparable pairs give exactly 1, so the minimum never exceeds 1.
    CHECK(c3.min_ratio <= 1.0 + 1e-12);
    CHECK_THROWS(check_lattice_condition(Region(k, Box::corner(2, 4)), 1.0));
  }

  TEST_CASE("Bernoulli sandwich of empty probabilities") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 3);
    const PinEnumerator e(r, segment_window(2, 2, 1));
    for (double eps : {0.1, 0.3, 0.5}) {
      const auto t = e.table(eps);
      const auto fit = fit_domination(t);
      CHECK(fit.p_sparse > 0.0);
      CHECK(fit.p_sparse <= fit.p_dense);
      const auto emp = t.empty_probabilities();
      for (std::uint64_t b = 0; b < emp.size(); ++b) {
        const int sz = std::popcount(b);
        CHECK(emp[b] >= std::pow(1.0 - fit.p_dense, sz) - 1e-12);
        CHECK(emp[b] <= std::pow(1.0 - fit.p_sparse, sz) + 1e-12);
      }
      const Point x{}, y = make_point({2, 0});
      const double exact = exact_pinned_covariance(e, eps, x, y);
      CHECK(bernoulli_window_covariance(e, fit.p_dense, x, y) <= exact + 1e-12);
      CHECK(exact <= bernoulli_window_covariance(e, fit.p_sparse, x, y) + 1e-12);
    }
    CHECK(segment_window(2, 3, 1).size() == 18);
  }

  TEST_CASE("sandwich on a 9x9 box at distance 3") {
    const auto k = simple_random_walk(2, true);
    const PinEnumerator e(Region::centered_box(k, 4), segment_window(2, 3, 1));
    const Point x{}, y = make_point({3, 0});
    for (double eps : {0.3, 0.5}) {
      const auto fit = fit_domination(e.table(eps));
      const double exact = exact_pinned_covariance(e, eps, x, y);
      CHECK(bernoulli_window_covariance(e, fit.p_dense, x, y) <= exact + 1e-12);
      CHECK(exact <= bernoulli_window_covariance(e, fit.p_sparse, x, y) + 1e-12);
    }
  }

  TEST_CASE("empty probability estimates") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 1);
    SamplingPlan plan;
    plan.samples = 20000;
    const auto none = empty_probability(r, 0.5, {}, plan, 1);
    CHECK(none.mc.mean == 1.0);
    CHECK(*none.exact == doctest::Approx(1.0));
    const std::vector<Point> centre{Point{}};
    const auto e = empty_probability(r, 0.5, centre, plan, 2);
    REQUIRE(e.exact.has_value());
    CHECK(std::abs(e.mc.mean - *e.exact) <= 3.0 * e.mc.std_error);
  }

  TEST_CASE("variance estimators") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 1);
    const double eps = 0.5;
    SamplingPlan plan;
    plan.samples = 20000;
    plan.chains = 2;
    const auto rb = variance_origin(r, eps, plan, 4);
    const auto naive = variance_origin_naive(r, eps, plan, 4);
    const double exact = exact_pinned_covariance(PinEnumerator::full(r), eps, Point{}, Point{});
    CHECK(std::abs(rb.mean - exact) <= 3.0 * rb.std_error);
    CHECK(std::abs(rb.mean - naive.mean) <= 3.0 * std::hypot(rb.std_error, naive.std_error));
    CHECK(rb.std_error < naive.std_error);
    const auto cov = covariance(r, eps, Point{}, Point{}, plan, 4);
    CHECK(cov.mean == rb.mean);
    const auto off = covariance(r, eps, Point{}, make_point({1, 1}), plan, 4);
    CHECK(off.mean >= 0.0);
    // Large epsilon pins everything.
    CHECK(variance_origin(r, 1e6, plan, 4).mean < 1e-3);
  }

  TEST_CASE("covariance decays along an axis") {
    const auto k = simple_random_walk(2, true);
    const Region r = Region::centered_box(k, 4);
    SamplingPlan plan;
    plan.samples = 400;
    std::vector<Point> targets;
    for (int d = 0; d <= 4; ++d) targets.push_back(make_point({d, 0}));
    const auto c = covariance_profile(r, 0.3, Point{}, targets, plan, 8);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].mean < c[i - 1].mean);
  }

  TEST_CASE("box stability") {
    const auto k = simple_random_walk(2, true);
    SamplingPlan plan;
    plan.samples = 4000;
    const std::vector<int> radii{0, 1};
    const auto a = box_stability(k, 0.3, radii, StabilityProbe::origin_unpinned, plan, 6);
    const auto b = box_stability(k, 0.3, radii, StabilityProbe::origin_unpinned, plan, 6);
    REQUIRE(a.size() == 2);
    CHECK(a[0].value.mean == b[0].value.mean);
    CHECK(a[1].value.mean == b[1].value.mean);
    // nu(0 unpinned) increases with the box.
    CHECK(*a[1].exact > *a[0].exact);
    for (const auto& row : a) CHECK(std::abs(row.value.mean - *row.exact) <= 3.0 * row.value.std_error + 1e-3);
    const std::vector<int> bad{2, 1};
    CHECK_THROWS_AS(box_stability(k, 0.3, bad, StabilityProbe::origin_unpinned, plan, 6),
                    std::invalid_argument);
  }
}
