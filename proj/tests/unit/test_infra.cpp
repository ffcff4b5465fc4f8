#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "pinfield/csv.hpp"
#include "pinfield/lattice.hpp"
#include "pinfield/rng.hpp"
#include "pinfield/stats.hpp"

using namespace pinfield;

TEST_SUITE("infra") {
  TEST_CASE("derived seeds are distinct and stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
    auto a = make_engine(1, 2), b = make_engine(1, 2);
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
  }

  TEST_CASE("uniform01 stays in the unit interval") {
    auto g = make_engine(3, 0);
    Accumulator acc;
    for (int i = 0; i < 100000; ++i) {
      const double u = uniform01(g);
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      acc.add(u);
    }
    CHECK(std::abs(acc.mean() - 0.5) < 4.0 * acc.std_error());
  }

  TEST_CASE("parallel_for visits every task once for any job count") {
    for (int jobs : {1, 2, 8}) {
      std::vector<std::atomic<int>> hits(257);
      parallel_for(hits.size(), jobs, [&](std::size_t t, std::size_t w) {
        CHECK(w < worker_count(hits.size(), jobs));
        hits[t]++;
      });
      for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK(worker_count(3, 8) <= 3);
    CHECK(worker_count(100, 1) == 1);
  }

  TEST_CASE("accumulator statistics") {
    Accumulator a, b, all;
    const std::vector<double> xs{1, 2, 3, 4, 5, 6};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      (i < 3 ? a : b).add(xs[i]);
      all.add(xs[i]);
    }
    a.merge(b);
    CHECK(a.count == 6);
    CHECK(a.mean() == doctest::Approx(3.5));
    CHECK(a.variance() == doctest::Approx(3.5));
    CHECK(a.std_error() == doctest::Approx(std::sqrt(3.5 / 6)));
    Accumulator one;
    one.add(2.0);
    CHECK(one.variance() == 0.0);
    const auto e = estimate_iid(xs, 11);
    CHECK(e.mean == doctest::Approx(3.5));
    CHECK(e.count == 6);
    CHECK(e.seed == 11);
  }

  TEST_CASE("batch means") {
    // Two series, each constant within halves: batch means are exact.
    std::vector<std::vector<double>> s{{1, 1, 3, 3}, {2, 2, 4, 4}};
    const auto e = estimate_batch_means(s, 2, 5);
    CHECK(e.mean == doctest::Approx(2.5));
    CHECK(e.count == 8);
    // Batch means 1, 3, 2, 4: sample variance 5/3 over 4 batches.
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  }

  TEST_CASE("Clopper-Pearson upper bound") {
    // Zero hits: 1 - (1 - c)^{1/n}.
    CHECK(binomial_upper_bound(0, 10000, 0.95) ==
          doctest::Approx(1.0 - std::pow(0.05, 1e-4)).epsilon(1e-9));
    CHECK(binomial_upper_bound(0, 10000, 0.95) < 3.7e-4);
    CHECK(binomial_upper_bound(10, 10, 0.95) == 1.0);
    const double u = binomial_upper_bound(5, 100, 0.95);
    CHECK(u > 0.05);
    CHECK(u < 0.12);
  }

  TEST_CASE("line fits") {
    const std::vector<double> x{0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 - 0.25 * v);
    auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.slope_error < 1e-12);
    CHECK(f.dof == 3);
    // Shifting y leaves the slope unchanged to rounding.
    std::vector<double> y2;
    for (double v : y) y2.push_back(v + 1e6);
    const std::vector<double> sig(x.size(), 0.01);
    CHECK(std::abs(fit_line(x, y2, sig).slope - fit_line(x, y, sig).slope) < 1e-9);
    const std::vector<double> flat{1, 1, 1};
    CHECK_THROWS(fit_line(flat, flat));
  }

  TEST_CASE("number formatting and CSV quoting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(std::int64_t{-42}) == "-42");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CsvTable t({"a", "b"});
    t.row({"1", "x,y"});
    CHECK(t.str() == "a,b\n1,\"x,y\"\n");
    CHECK_THROWS_AS(t.row({"1"}), std::invalid_argument);
    CHECK_THROWS_AS(CsvTable({}), std::invalid_argument);
  }

  TEST_CASE("box indexing is lexicographic") {
    const auto b = Box::centered(2, 2);
    CHECK(b.size() == 25);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index(b.point(i)) == i);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b.point(i - 1) < b.point(i));
    CHECK(b.contains(make_point({2, -2})));
    CHECK_FALSE(b.contains(make_point({3, 0})));
    const auto c = Box::corner(3, 2);
    CHECK(c.size() == 8);
    CHECK(c.point(7) == make_point({1, 1, 1}));
    CHECK(norm_inf(make_point({-3, 2})) == 3);
    CHECK(norm1(make_point({-3, 2})) == 5);
    CHECK(format_point(make_point({1, -2, 3}), 2) == "1;-2");
    CHECK(axis_point(1, 4) == make_point({0, 4}));
  }

  TEST_CASE("visited set spills past its grid") {
    VisitedSet v(2, 2);
    CHECK(v.insert(make_point({0, 0})));
    CHECK_FALSE(v.insert(make_point({0, 0})));
    CHECK(v.insert(make_point({50, -7})));
    CHECK_FALSE(v.insert(make_point({50, -7})));
    CHECK(v.contains(make_point({50, -7})));
    CHECK(v.size() == 2);
    v.clear();
    CHECK(v.size() == 0);
    CHECK_FALSE(v.contains(make_point({0, 0})));
    CHECK_FALSE(v.contains(make_point({50, -7})));
  }
}
