#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles/paths.hpp"
#include "pinfield/errors.hpp"
#include "pinfield/scaling.hpp"

using namespace pinfield;

namespace {

MassCurve exponential_curve(double amplitude, double m, int r_max) {
  MassCurve c;
  for (int r = 0; r <= r_max; ++r) {
    c.r.push_back(r);
    c.value.push_back(amplitude * std::exp(-m * r));
    c.error.push_back(0.0);
  }
  return c;
}

}  // namespace

TEST_SUITE("scaling") {
  TEST_CASE("sausage Green function at full trap density") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 20;
    CHECK(sausage_green(k, 1.0, Point{}, 100, 1, o).value.mean == 0.0);
    CHECK(sausage_green(k, 1.0, make_point({1, 0}), 100, 1, o).value.mean == 0.0);
    CHECK_THROWS_AS(sausage_green(k, 0.0, Point{}, 10, 1, o), std::invalid_argument);
  }

  TEST_CASE("sausage Green function against path enumeration") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 6;
    const Point x = make_point({1, 0});
    const double exact = oracle::sausage_green(k, 0.5, x, 6);
    const auto est = sausage_green(k, 0.5, x, 200000, 3, o);
    CHECK(std::abs(est.value.mean - exact) <= 3.0 * est.value.std_error);
    // The origin term includes n = 0 with weight (1 - p).
    const double e0 = oracle::sausage_green(k, 0.5, Point{}, 6);
    const auto s0 = sausage_green(k, 0.5, Point{}, 200000, 4, o);
    CHECK(std::abs(s0.value.mean - e0) <= 3.0 * s0.value.std_error);
  }

  TEST_CASE("survival against path enumeration") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 8;
    const Point x = make_point({2, 0});
    const double exact = oracle::survival(k, 0.3, x, 8);
    const auto est = survival_to_target(k, 0.3, x, 200000, 5, o);
    CHECK(std::abs(est.value.mean - exact) <= 3.0 * est.value.std_error);
    // Neighbour: the one-step hit alone contributes (1-p)^2 p(x).
    o.n_max = 1;
    const auto one = survival_to_target(k, 0.3, make_point({1, 0}), 1, 6, o);
    CHECK(oracle::survival(k, 0.3, make_point({1, 0}), 1) == doctest::Approx(0.49 * 0.25));
    CHECK((one.value.mean == 0.0 || one.value.mean == doctest::Approx(0.49)));
    o.n_max = 50;
    CHECK(survival_to_target(k, 0.999, x, 2000, 7, o).value.mean < 1e-4);
  }

  TEST_CASE("coupled paths: weights fall pathwise in p") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 300;
    o.keep_samples = true;
    const Point x = make_point({2, 1});
    std::vector<double> prev;
    for (double p : {0.01, 0.05, 0.2, 0.6}) {
      const auto s = sausage_green(k, p, x, 500, 11, o);
      REQUIRE(s.samples.size() == 500);
      if (!prev.empty()) {
        for (std::size_t i = 0; i < prev.size(); ++i) CHECK(s.samples[i] <= prev[i]);
      }
      prev = s.samples;
    }
  }

  TEST_CASE("survival never exceeds the plain hitting probability") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 200;
    o.keep_samples = true;
    const Point x = make_point({3, 0});
    const auto hit = survival_to_target(k, 0.0, x, 1000, 12, o);
    const auto surv = survival_to_target(k, 0.1, x, 1000, 12, o);
    for (std::size_t i = 0; i < hit.samples.size(); ++i) {
      CHECK((hit.samples[i] == 0.0 || hit.samples[i] == 1.0));
      CHECK(surv.samples[i] <= hit.samples[i]);
    }
  }

  TEST_CASE("truncation bound is reported") {
    CHECK(truncation_bound(0.1, 1000) ==
          doctest::Approx(std::pow(0.9, 0.1 * 1000 / std::log(1000.0))));
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 10;
    CHECK(sausage_green(k, 0.01, Point{}, 10, 1, o).truncated);
    o.n_max = 100000;
    CHECK_FALSE(sausage_green(k, 0.5, Point{}, 10, 1, o).truncated);
  }

  TEST_CASE("replicas are independent of the job count") {
    const auto k = simple_random_walk(3);
    SausageOptions o;
    o.n_max = 400;
    o.weight_floor = 1e-12;
    const auto a = sausage_slab_curve(k, 0.05, 6, 3000, 9, o, 1);
    const auto b = sausage_slab_curve(k, 0.05, 6, 3000, 9, o, 4);
    CHECK(a.value == b.value);
    CHECK(a.error == b.error);
    const auto c = sausage_axis_curve(k, 0.05, 6, 3000, 9, o, 1);
    const auto d = sausage_axis_curve(k, 0.05, 6, 3000, 9, o, 3);
    CHECK(c.value == d.value);
  }

  TEST_CASE("axis curve at distance 0 is the origin Green function") {
    const auto k = simple_random_walk(2);
    SausageOptions o;
    o.n_max = 200;
    const auto c = sausage_axis_curve(k, 0.2, 3, 4000, 13, o);
    const auto g = sausage_green(k, 0.2, Point{}, 4000, 13, o);
    CHECK(c.value[0] == doctest::Approx(g.value.mean).epsilon(1e-12));
    for (std::size_t i = 1; i < c.value.size(); ++i) CHECK(c.value[i] < c.value[i - 1]);
  }

  TEST_CASE("mass fits") {
    auto c = exponential_curve(1.0, 0.3, 12);
    const auto f = mass_fit(c, 2, 10);
    CHECK(f.m == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f.m_error < 1e-12);
    CHECK(f.points == 9);
    CHECK(f.slope_monotone);
    const auto g = mass_fit(exponential_curve(5.0, 0.3, 12), 2, 10);
    CHECK(std::abs(g.m - f.m) <= 1e-12);
    CHECK(g.intercept == doctest::Approx(f.intercept - std::log(5.0)).epsilon(1e-12));
    // Scaling a noisy curve leaves the slope unchanged.
    MassCurve n = exponential_curve(1.0, 0.1, 30);
    auto gen = make_engine(14, 0);
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      const double u1 = std::max(uniform01(gen), 1e-300), u2 = uniform01(gen);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      n.value[i] *= 1.0 + 0.01 * z;
      n.error[i] = 0.01 * n.value[i];
    }
    const auto fn = mass_fit(n, 3, 30);
    CHECK(std::abs(fn.m - 0.1) <= 2.0 * fn.m_error);
    MassCurve scaled = n;
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      scaled.value[i] *= 37.5;
      scaled.error[i] *= 37.5;
    }
    CHECK(std::abs(mass_fit(scaled, 3, 30).m - fn.m) <= 1e-12);
    // Errors.
    c.value[5] = 0.0;
    CHECK_THROWS_AS(mass_fit(c, 2, 10), NumericalError);
    CHECK_THROWS_AS(mass_fit(exponential_curve(1.0, 0.3, 12), 4, 5), std::invalid_argument);
  }

  TEST_CASE("exponent and variance slope fits") {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
    std::vector<double> m, v;
    for (double e : eps) {
      m.push_back(std::sqrt(e));
      v.push_back(std::abs(std::log(e)) / std::numbers::pi);
    }
    CHECK(fit_exponent(eps, m).slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit_variance_slope(eps, v).slope == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
    // Lazy and plain SRW describe the same field.
    CHECK(variance_slope_target(simple_random_walk(2, true)) == doctest::Approx(1.0 / std::numbers::pi));
    CHECK(variance_slope_target(simple_random_walk(2)) == doctest::Approx(1.0 / std::numbers::pi));
  }

  TEST_CASE("trap density mapping and mass guess") {
    CHECK(trap_density(3, 0.1, TrapMapping::standard) == doctest::Approx(0.1));
    CHECK(trap_density(2, 0.1, TrapMapping::standard) == doctest::Approx(0.1 / std::sqrt(std::log(10.0))));
    CHECK(trap_density(2, 0.1, TrapMapping::linear, 2.0) == doctest::Approx(0.2));
    CHECK_THROWS_AS(trap_density(2, 0.0, TrapMapping::standard), std::invalid_argument);
    const auto k3 = simple_random_walk(3);
    CHECK(mass_guess(k3, 0.01) == doctest::Approx(std::sqrt(2.0 * 0.01 * 3.0)));
  }

  TEST_CASE("epsilon grids and the box policy") {
    const std::vector<double> good{0.3, 0.1, 0.03};
    CHECK_NOTHROW(check_epsilon_grid(good));
    const std::vector<double> up{0.1, 0.3, 0.03};
    CHECK_THROWS_AS(check_epsilon_grid(up), std::invalid_argument);
    const std::vector<double> zero{0.3, 0.0};
    CHECK_THROWS_AS(check_epsilon_grid(zero), std::invalid_argument);
    BoxPolicy p;
    CHECK(p.radius_for(0.3) == 8);
    CHECK(p.radius_for(0.03) == static_cast<int>(std::ceil(2.0 * std::log(1 / 0.03) / std::sqrt(0.03))));
    CHECK(p.describe().find("eps^-1/2") != std::string::npos);
    VarianceScanOptions o;
    o.radius = 5;
    const std::vector<double> one{0.3, 0.2, 0.1};
    CHECK_THROWS_AS(variance_scan(simple_random_walk(2, true), one, o, 1), std::invalid_argument);
  }

  TEST_CASE("variance scan on a small grid") {
    const auto k = simple_random_walk(2, true);
    const std::vector<double> eps{0.5, 0.4, 0.3};
    VarianceScanOptions o;
    o.plan.samples = 200;
    o.plan.batches = 10;
    const auto a = variance_scan(k, eps, o, 3);
    const auto b = variance_scan(k, eps, o, 3, 2);
    REQUIRE(a.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.rows[i].value.mean == b.rows[i].value.mean);
      CHECK(a.rows[i].value.mean > 0.0);
      CHECK(a.rows[i].extra_value("radius") >= 8.0);
    }
    // Fewer pins, larger variance.
    CHECK(a.rows[2].value.mean > a.rows[0].value.mean);
    CHECK(std::stod(a.summary_value("target_slope")) == doctest::Approx(1.0 / std::numbers::pi));
  }

  TEST_CASE("mass scan in three dimensions is reproducible") {
    const auto k = simple_random_walk(3);
    const std::vector<double> eps{0.1, 0.07, 0.05};
    MassScanOptions o;
    o.budget = 1000;
    const auto a = mass_scan(k, eps, o, 5, 1);
    const auto b = mass_scan(k, eps, o, 5, 2);
    REQUIRE(a.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(a.rows[i].value.mean == b.rows[i].value.mean);
      CHECK(a.rows[i].value.mean > 0.0);
      CHECK(a.rows[i].extra_value("trap_density") == eps[i]);
    }
    CHECK(a.fit.slope == b.fit.slope);
    CHECK(a.summary_value("curve") == "slab");
  }

  TEST_CASE("mass scan flags points it cannot fit and carries on") {
    // Mass ~1.5 at eps = 0.4: the window of 3-6 correlation lengths holds too few sites.
    const std::vector<double> eps{0.4, 0.2};
    MassScanOptions o;
    o.budget = 200;
    const auto a = mass_scan(simple_random_walk(3), eps, o, 5);
    REQUIRE(a.rows.size() == 2);
    bool flagged = false;
    for (const auto& f : a.rows[0].flags) flagged = flagged || f.rfind("fit_failed", 0) == 0;
    CHECK(flagged);
    CHECK(std::isnan(a.rows[0].value.mean));
  }
}
