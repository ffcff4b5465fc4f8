#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pinfield/renewal1d.hpp"

using namespace pinfield;

namespace {

/// Plain double loop for the defining sum at a given lambda.
double defining_sum(double eps, double lambda, long K) {
  long double s = 0.0L;
  for (long k = 1; k <= K; ++k) {
    s += std::exp(-static_cast<long double>(lambda) * k) /
         std::sqrt(2.0L * std::numbers::pi_v<long double> * k);
  }
  return static_cast<double>(eps * s);
}

}  // namespace

TEST_SUITE("renewal1d") {
  TEST_CASE("return density") {
    CHECK(f_pmf(1) == doctest::Approx(0.398942280401433).epsilon(1e-14));
    CHECK(f_pmf(4) == doctest::Approx(f_pmf(1) / 2.0).epsilon(1e-15));
    for (long k : {1L, 7L, 1000L, 123456L}) {
      CHECK(static_cast<double>(k) * f_pmf(k) * f_pmf(k) ==
            doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(f_pmf(0), std::invalid_argument);
  }

  TEST_CASE("bridge variance sums") {
    CHECK(bridge_variance_sum(2) == doctest::Approx(0.5));
    for (long n = 1; n <= 30; ++n) {
      double s = 0.0;
      for (long m = 0; m < n; ++m) s += static_cast<double>(m * (n - m)) / static_cast<double>(n);
      CHECK(bridge_variance_sum(n) == doctest::Approx(s).epsilon(1e-13));
    }
  }

  TEST_CASE("defining equation residual on the grid") {
    for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01}) {
      const auto m = solve_renewal(eps);
      CHECK(m.residual <= 1e-10);
      CHECK(m.lambda > 0.0);
      CHECK(m.tail_bound < 1e-12);
    }
    // Independent re-evaluation with a long-double loop.
    const auto m = solve_renewal(0.3);
    CHECK(std::abs(defining_sum(0.3, m.lambda, 4 * m.k_max) - 1.0) <= 1e-10);
  }

  TEST_CASE("tilt asymptotics") {
    // Roots of eps Li_{1/2}(e^{-lambda}) = sqrt(2 pi), from 30-digit polylog
    // evaluations. First-order correction: lambda ~ pi / (sqrt(2 pi)/eps - zeta(1/2))^2,
    // so 2 lambda / eps^2 is 0.893 at eps = 0.1.
    const double l1 = solve_lambda(0.1);
    CHECK(l1 == doctest::Approx(0.00446494240142001313).epsilon(1e-9));
    CHECK(solve_lambda(0.05) == doctest::Approx(0.00118024939501960618).epsilon(1e-9));
    const double l2 = solve_lambda(0.01);
    CHECK(l2 == doctest::Approx(0.0000494224588988481110).epsilon(1e-9));
    CHECK(2.0 * l2 / 1e-4 >= 0.9);
    CHECK(2.0 * l2 / 1e-4 <= 1.1);
    CHECK(mass_1d(0.01) == l2);
  }

  TEST_CASE("scaling collapse approaches one monotonically") {
    double prev_l = 1e300, prev_v = 1e300, prev_lam = 1e300, prev_m = 0.0;
    for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01}) {
      const auto m = solve_renewal(eps);
      const double cl = std::abs(2.0 * m.lambda / (eps * eps) - 1.0);
      const double cv = std::abs(variance_1d(m) * 2.0 * eps * eps - 1.0);
      CHECK(cl < prev_l);
      CHECK(cv < prev_v);
      CHECK(m.lambda < prev_lam);
      CHECK(renewal_mean(m) > prev_m);
      prev_l = cl;
      prev_v = cv;
      prev_lam = m.lambda;
      prev_m = renewal_mean(m);
    }
  }

  TEST_CASE("mean spacing and variance at small epsilon") {
    const auto m = solve_renewal(0.01);
    const double M = renewal_mean(m);
    CHECK(M * 1e-6 >= 0.8);
    CHECK(M * 1e-6 <= 1.2);
    const double v = variance_1d(m);
    CHECK(v * 2e-4 >= 0.8);
    CHECK(v * 2e-4 <= 1.2);
    const auto one = solve_renewal(1.0);
    CHECK(renewal_mean(one) > 0.0);
    CHECK(std::isfinite(renewal_mean(one)));
  }

  TEST_CASE("variance ratio between neighbouring epsilons") {
    const double r = variance_1d(solve_renewal(0.05)) / variance_1d(solve_renewal(0.1));
    CHECK(std::abs(r / 4.0 - 1.0) < 0.15);
  }

  TEST_CASE("inputs and reproducibility") {
    CHECK_THROWS_AS(solve_renewal(0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_renewal(-1.0), std::invalid_argument);
    // Large eps is still solvable: the sum diverges as lambda -> 0.
    CHECK(solve_lambda(50.0) > 0.0);
    const auto a = solve_renewal(0.03), b = solve_renewal(0.03);
    CHECK(a.lambda == b.lambda);
    CHECK(a.mean_sum == b.mean_sum);
  }
}
