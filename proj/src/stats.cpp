#include "pinfield/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>

namespace pinfield {

double Accumulator::mean() const { return count ? sum / static_cast<double>(count) : 0.0; }

double Accumulator::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
}

double Accumulator::std_error() const {
  return count < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
}

Estimate Accumulator::estimate(std::uint64_t seed) const {
  return {mean(), std_error(), count, seed};
}

Estimate estimate_iid(std::span<const double> samples, std::uint64_t seed) {
  Accumulator acc;
  for (double v : samples) acc.add(v);
  return acc.estimate(seed);
}

Estimate estimate_batch_means(const std::vector<std::vector<double>>& series,
                              std::size_t batches_per_series, std::uint64_t seed) {
  if (batches_per_series < 1) throw std::invalid_argument("batch means: need >= 1 batch");
  Accumulator batches;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : series) {
    for (double v : s) total += v;
    n += s.size();
    const std::size_t b = std::min(batches_per_series, s.size());
    if (b == 0) continue;
    const std::size_t len = s.size() / b;
    for (std::size_t i = 0; i < b; ++i) {
      double m = 0.0;
      for (std::size_t j = i * len; j < (i + 1) * len; ++j) m += s[j];
      batches.add(m / static_cast<double>(len));
    }
  }
  Estimate e;
  e.mean = n ? total / static_cast<double>(n) : 0.0;
  e.std_error = batches.std_error();
  e.count = n;
  e.seed = seed;
  return e;
}

double binomial_upper_bound(std::size_t hits, std::size_t trials, double confidence) {
  if (trials == 0) throw std::invalid_argument("binomial bound: zero trials");
  if (hits > trials) throw std::invalid_argument("binomial bound: hits > trials");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("binomial bound: confidence must be in (0,1)");
  }
  if (hits == trials) return 1.0;
  const boost::math::beta_distribution<double> dist(static_cast<double>(hits) + 1.0,
                                                    static_cast<double>(trials - hits));
  return boost::math::quantile(dist, confidence);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (n != y.size() || (!sigma.empty() && sigma.size() != n)) {
    throw std::invalid_argument("fit_line: size mismatch");
  }
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  const bool weighted = !sigma.empty();
  std::vector<double> w(n, 1.0);
  double sw = 0, mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weighted) {
      if (!(sigma[i] > 0.0)) throw std::invalid_argument("fit_line: sigma must be positive");
      w[i] = 1.0 / (sigma[i] * sigma[i]);
    }
    sw += w[i];
    mx += w[i] * x[i];
    my += w[i] * y[i];
  }
  mx /= sw;
  my /= sw;
  // Centered sums keep the slope exact under shifts of y.
  double sxx = 0, sxy = 0, span_x = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - my);
    span_x = std::max(span_x, std::abs(dx));
  }
  if (!(sxx > 0.0) || span_x <= 1e-12 * std::max(1.0, std::abs(mx))) {
    throw std::invalid_argument("fit_line: degenerate abscissae");
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.residuals[i] = y[i] - (f.intercept + f.slope * x[i]);
    f.chi2 += w[i] * f.residuals[i] * f.residuals[i];
  }
  f.dof = n - 2;
  double scale = 1.0;
  if (weighted) {
    if (f.dof > 0) scale = std::max(1.0, f.chi2 / static_cast<double>(f.dof));
  } else {
    scale = f.dof > 0 ? f.chi2 / static_cast<double>(f.dof) : 0.0;
  }
  f.slope_error = std::sqrt(scale / sxx);
  f.intercept_error = std::sqrt(scale * (1.0 / sw + mx * mx / sxx));
  return f;
}

}  // namespace pinfield
