#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pinfield/errors.hpp"
#include "pinfield/scaling.hpp"

namespace pinfield {

MassFit mass_fit(const MassCurve& curve, double r_lo, double r_hi) {
  const std::size_t n = curve.r.size();
  if (curve.value.size() != n || (!curve.error.empty() && curve.error.size() != n))
    throw std::invalid_argument("mass_fit: curve columns differ in length");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(curve.r[i] > curve.r[i - 1])) throw std::invalid_argument("mass_fit: r must increase");
  }
  std::vector<double> r, y, s;
  bool weighted = !curve.error.empty();
  for (std::size_t i = 0; i < n; ++i) {
    if (curve.r[i] < r_lo || curve.r[i] > r_hi) continue;
    const double c = curve.value[i];
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalError("mass_fit: non-positive value at r = " + std::to_string(curve.r[i]));
    r.push_back(curve.r[i]);
    y.push_back(-std::log(c));
    const double e = weighted ? curve.error[i] / c : 0.0;
    if (!(e > 0.0)) weighted = false;
    s.push_back(e);
  }
  if (r.size() < 3)
    throw std::invalid_argument("mass_fit: window holds fewer than three points");
  if (!weighted) s.clear();

  const LinearFit f = fit_line(r, y, s);
  MassFit out;
  out.m = f.slope;
  out.m_error = f.slope_error;
  out.intercept = f.intercept;
  out.chi2 = f.chi2;
  out.dof = f.dof;
  out.points = r.size();
  out.r_lo = r.front();
  out.r_hi = r.back();
  out.residuals = f.residuals;

  // Growing windows [r_lo, r_j]: the slope should not fall beyond its noise.
  double prev = 0.0, prev_err = 0.0;
  for (std::size_t j = 3; j <= r.size(); ++j) {
    const std::span<const double> sj = s.empty() ? std::span<const double>{}
                                                 : std::span<const double>(s.data(), j);
    const LinearFit g = fit_line(std::span<const double>(r.data(), j),
                                 std::span<const double>(y.data(), j), sj);
    if (j > 3) {
      const double tol = 2.0 * std::hypot(prev_err, g.slope_error) + 1e-12 * std::abs(prev);
      if (g.slope < prev - tol) out.slope_monotone = false;
    }
    prev = g.slope;
    prev_err = g.slope_error;
  }
  return out;
}

double trap_density(int dim, double epsilon, TrapMapping mapping, double constant) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("trap_density: epsilon must lie in (0, 1)");
  if (!(constant > 0.0)) throw std::invalid_argument("trap_density: constant must be positive");
  double p = constant * epsilon;
  if (mapping == TrapMapping::standard && dim == 2) p /= std::sqrt(std::abs(std::log(epsilon)));
  if (p > 1.0) throw std::invalid_argument("trap_density: mapped density exceeds 1");
  return p;
}

double mass_guess(const StepKernel& k, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("mass_guess: p must lie in (0, 1)");
  double rate = p;
  if (k.dim() == 2) {
    rate = p * 2.0 * std::numbers::pi * std::sqrt(k.det_covariance()) /
           std::max(1.0, std::log(1.0 / p));
  }
  return std::sqrt(2.0 * rate / k.covariance()(0, 0));
}

LinearFit fit_exponent(std::span<const double> eps, std::span<const double> m,
                       std::span<const double> m_error) {
  if (eps.size() != m.size()) throw std::invalid_argument("fit_exponent: size mismatch");
  std::vector<double> x, y, s;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(m[i] > 0.0))
      throw std::invalid_argument("fit_exponent: eps and m must be positive");
    x.push_back(std::log(eps[i]));
    y.push_back(std::log(m[i]));
    if (!m_error.empty()) s.push_back(m_error[i] / m[i]);
  }
  if (x.size() < 3) throw std::invalid_argument("fit_exponent: need at least three points");
  return fit_line(x, y, s);
}

LinearFit fit_variance_slope(std::span<const double> eps, std::span<const double> v,
                             std::span<const double> v_error) {
  if (eps.size() != v.size()) throw std::invalid_argument("fit_variance_slope: size mismatch");
  std::vector<double> x;
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument("fit_variance_slope: eps must lie in (0, 1)");
    x.push_back(std::abs(std::log(e)));
  }
  if (x.size() < 3) throw std::invalid_argument("fit_variance_slope: need at least three points");
  return fit_line(x, v, v_error);
}

double variance_slope_target(const StepKernel& k) {
  return 1.0 / (2.0 * std::numbers::pi * k.beta_eff() * std::sqrt(k.det_covariance()));
}

void check_epsilon_grid(std::span<const double> eps) {
  if (eps.empty()) throw std::invalid_argument("epsilon grid is empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(eps[i] < 1.0)) throw std::invalid_argument("epsilon must be below 1");
    if (i > 0 && !(eps[i] < eps[i - 1]))
      throw std::invalid_argument("epsilon grid must be strictly decreasing");
  }
}

int BoxPolicy::radius_for(double epsilon) const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  const double floor = c * std::abs(std::log(epsilon)) / std::sqrt(epsilon);
  return std::max(min_radius, static_cast<int>(std::ceil(floor - 1e-9)));
}

std::string BoxPolicy::describe() const {
  std::ostringstream os;
  os << "radius >= max(" << min_radius << ", ceil(" << c << " * eps^-1/2 * |log eps|))";
  return os.str();
}

double ScanRow::extra_value(const std::string& key) const {
  for (const auto& [k, v] : extra) {
    if (k == key) return v;
  }
  throw std::out_of_range("ScanRow: no column " + key);
}

std::string ScanResult::summary_value(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  throw std::out_of_range("ScanResult: no summary key " + key);
}

}  // namespace pinfield
