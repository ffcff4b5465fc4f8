#include "pinfield/renewal1d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "pinfield/errors.hpp"

namespace pinfield {

namespace {

constexpr double kTailRelative = 1e-12;

// Neumaier summation; the sums run to millions of terms.
struct Sum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

struct Sums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  long k_max = 0;
  double tail = 0.0;
};

// Integral bounds on sum_{k>K} k^a e^{-lambda k} / sqrt(2 pi k), a = 0, 1, 2.
double tail_integral(double power, double lambda, long K) {
  const double a = power + 0.5;
  return boost::math::tgamma(a, lambda * static_cast<double>(K)) / std::pow(lambda, a) /
         std::sqrt(2.0 * std::numbers::pi);
}

Sums tilted_sums(double lambda, bool moments) {
  long K = std::max(64L, static_cast<long>(std::ceil(40.0 / lambda)));
  for (;;) {
    if (K > 2'000'000'000L) throw ResourceError("renewal sums need more than 2e9 terms");
    Sum a, b, c;
    for (long k = 1; k <= K; ++k) {
      const double t = std::exp(-lambda * static_cast<double>(k)) * f_pmf(k);
      a.add(t);
      if (moments) {
        const double kd = static_cast<double>(k);
        b.add(kd * t);
        c.add((kd * kd - 1.0) / 6.0 * t);
      }
    }
    Sums s{a.value(), b.value(), c.value(), K, 0.0};
    s.tail = tail_integral(0.0, lambda, K) / s.s0;
    if (moments) {
      s.tail = std::max(s.tail, tail_integral(1.0, lambda, K) / s.s1);
      s.tail = std::max(s.tail, tail_integral(2.0, lambda, K) / 6.0 / s.s2);
    }
    if (s.tail < kTailRelative) return s;
    K *= 2;
  }
}

}  // namespace

double f_pmf(long k) {
  if (k <= 0) throw std::invalid_argument("f_pmf: k must be >= 1");
  return 1.0 / std::sqrt(2.0 * std::numbers::pi * static_cast<double>(k));
}

double bridge_variance_sum(long n) {
  if (n < 1) throw std::invalid_argument("bridge_variance_sum: n must be >= 1");
  const double nd = static_cast<double>(n);
  return (nd * nd - 1.0) / 6.0;
}

RenewalModel solve_renewal(double epsilon, double tol) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  auto excess = [&](double lam) { return epsilon * tilted_sums(lam, false).s0 - 1.0; };

  // Bracket around the small-eps value eps^2/2, capped so e^{-lambda} stays
  // far from underflow at large eps.
  double lo = std::min(0.25 * epsilon * epsilon, 1.0), hi = 4.0 * lo;
  while (excess(lo) <= 0.0) lo *= 0.5;
  while (excess(hi) >= 0.0) hi *= 2.0;

  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  RenewalModel m;
  m.epsilon = epsilon;
  m.lambda = 0.5 * (lo + hi);
  const Sums s = tilted_sums(m.lambda, true);
  m.k_max = s.k_max;
  m.residual = std::abs(epsilon * s.s0 - 1.0);
  m.mean_sum = s.s1;
  m.bridge_sum = s.s2;
  m.tail_bound = s.tail;
  if (m.residual > tol) {
    throw NumericalError("solve_renewal: residual " + std::to_string(m.residual) +
                         " above tolerance");
  }
  return m;
}

double solve_lambda(double epsilon, double tol) { return solve_renewal(epsilon, tol).lambda; }

double renewal_mean(const RenewalModel& m) { return m.mean_sum; }

double variance_1d(const RenewalModel& m) { return m.bridge_sum / m.mean_sum; }

double mass_1d(double epsilon) { return solve_lambda(epsilon); }

}  // namespace pinfield
