#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pinfield {

/// Monte Carlo statistic with provenance.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;  // replicas, or recorded samples for chains
  std::uint64_t seed = 0;
};

/// (sum, sum of squares, count). Merged in a fixed order by callers.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  double mean() const;
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  double std_error() const;
  Estimate estimate(std::uint64_t seed) const;
};

/// Mean and i.i.d. standard error of independent samples, summed in order.
Estimate estimate_iid(std::span<const double> samples, std::uint64_t seed);

/// Batch-means estimate for correlated series. Every series is cut into
/// `batches_per_series` equal batches; the standard error comes from the
/// spread of all batch means.
Estimate estimate_batch_means(const std::vector<std::vector<double>>& series,
                              std::size_t batches_per_series, std::uint64_t seed);

/// One-sided Clopper-Pearson upper bound on a binomial probability.
double binomial_upper_bound(std::size_t hits, std::size_t trials, double confidence);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double intercept_error = 0.0;
  double chi2 = 0.0;  // weighted residual sum of squares
  std::size_t dof = 0;
  std::vector<double> residuals;
};

/// Least squares y = a + b x. With positive sigmas this is weighted least
/// squares and the parameter errors are scaled by max(1, chi2/dof); with an
/// empty sigma span it is ordinary least squares with errors from the
/// residual variance.
LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma = {});

}  // namespace pinfield
