#pragma once

namespace pinfield {

/// psi_k(0) for a unit-variance Gaussian step: 1 / sqrt(2 pi k).
double f_pmf(long k);

/// Tilted renewal law of the one-dimensional pinned chain. f_lambda(k) =
/// e^{-lambda k} f(k); the gap law is eps f_lambda.
struct RenewalModel {
  double epsilon = 0.0;
  double lambda = 0.0;
  long k_max = 0;           // terms summed; tails beyond are bounded analytically
  double residual = 0.0;    // |eps sum_k f_lambda(k) - 1|
  double mean_sum = 0.0;    // M = sum_k k f_lambda(k)
  double bridge_sum = 0.0;  // sum_n f_lambda(n) (n^2 - 1) / 6
  double tail_bound = 0.0;  // largest relative tail bound among the three sums
};

/// Bisection for lambda on eps sum_k e^{-lambda k} f(k) = 1. Every eps > 0 is
/// solvable: the sum diverges as lambda -> 0.
RenewalModel solve_renewal(double epsilon, double tol = 1e-12);
double solve_lambda(double epsilon, double tol = 1e-12);

/// M = sum_j j f_lambda(j); asymptotically eps^{-3}.
double renewal_mean(const RenewalModel& m);
/// (1/M) sum_n f_lambda(n) sum_{m<n} m (n - m) / n, the variance of phi_0.
double variance_1d(const RenewalModel& m);
/// Decay rate of the two-point function, lambda(eps).
double mass_1d(double epsilon);

/// sum_{m=0}^{n-1} m (n - m) / n = (n^2 - 1) / 6.
double bridge_variance_sum(long n);

}  // namespace pinfield
