#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pinfield/csv.hpp"
#include "pinfield/errors.hpp"
#include "pinfield/scaling.hpp"

namespace pinfield {

namespace {

long nmax_for(const StepKernel& k, double m_guess, const MassScanOptions& o) {
  const double n = o.nmax_policy == NmaxPolicy::diffusive
                       ? o.nmax_factor * k.dim() / (m_guess * m_guess)
                       : o.nmax_factor / m_guess;
  return std::max(10L, static_cast<long>(std::ceil(n)));
}

// Largest r such that every value on [r_lo, r] is positive.
double positive_reach(const MassCurve& c, double r_lo, double r_hi) {
  double last = r_lo;
  for (std::size_t i = 0; i < c.r.size(); ++i) {
    if (c.r[i] < r_lo) continue;
    if (c.r[i] > r_hi || !(c.value[i] > 0.0)) break;
    last = c.r[i];
  }
  return last;
}

MassCurve pinning_curve(const StepKernel& k, double eps, int r_max, const MassScanOptions& o,
                        std::uint64_t seed, int jobs) {
  const int radius = std::max(8, 2 * r_max);
  const Region lambda = Region::centered_box(k, radius);
  std::vector<Point> targets;
  for (int r = 0; r <= r_max; ++r) {
    for (int i = 0; i < k.dim(); ++i) {
      targets.push_back(axis_point(i, r));
      targets.push_back(axis_point(i, -r));
    }
  }
  SamplingPlan plan = o.pin_plan;
  plan.samples = o.budget;
  const auto est = covariance_profile(lambda, eps, Point{}, targets, plan, seed, jobs);
  MassCurve c;
  const std::size_t per_r = 2 * static_cast<std::size_t>(k.dim());
  for (int r = 0; r <= r_max; ++r) {
    double v = 0.0, e2 = 0.0;
    for (std::size_t j = 0; j < per_r; ++j) {
      const auto& t = est[static_cast<std::size_t>(r) * per_r + j];
      v += t.mean / per_r;
      e2 += t.std_error * t.std_error / (per_r * per_r);
    }
    c.r.push_back(r);
    c.value.push_back(v);
    c.error.push_back(std::sqrt(e2));  // upper bound ignores positive correlation
  }
  return c;
}

}  // namespace

ScanResult mass_scan(const StepKernel& k, std::span<const double> eps, const MassScanOptions& o,
                     std::uint64_t seed, int jobs) {
  check_epsilon_grid(eps);
  if (o.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (!(o.fit_lo > 0.0 && o.fit_hi > o.fit_lo))
    throw std::invalid_argument("fit_window must satisfy 0 < lo < hi");
  if (!(o.nmax_factor > 0.0)) throw std::invalid_argument("nmax factor must be positive");

  ScanResult out;
  out.quantity = "mass";
  std::vector<double> fe, fm, fs;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double e = eps[i];
    const std::uint64_t point_seed = derive_seed(seed, i);
    ScanRow row;
    row.epsilon = e;
    row.value.seed = point_seed;
    const double p = trap_density(k.dim(), e, o.mapping, o.mapping_constant);
    const double m_guess = mass_guess(k, p);
    // Room for the second-pass window if the guess is high by up to 2x.
    const int r_max = static_cast<int>(std::ceil(2.0 * o.fit_hi / m_guess)) + 1;
    const long n_max = nmax_for(k, m_guess, o);
    row.extra = {{"trap_density", p}, {"m_guess", m_guess}, {"r_max", r_max}};

    MassCurve curve;
    if (o.mode == MassMode::bernoulli_surrogate) {
      SausageOptions so;
      so.n_max = n_max;
      so.weight_floor = o.weight_floor;
      curve = o.curve == CurveKind::slab
                  ? sausage_slab_curve(k, p, r_max, o.budget, point_seed, so, jobs)
                  : sausage_axis_curve(k, p, r_max, o.budget, point_seed, so, jobs);
      const double tb = truncation_bound(p, n_max);
      row.extra.emplace_back("n_max", static_cast<double>(n_max));
      row.extra.emplace_back("truncation_bound", tb);
      if (tb > so.truncation_tolerance) row.flags.push_back("truncated");
    } else {
      curve = pinning_curve(k, e, r_max, o, point_seed, jobs);
    }
    row.n_used = o.budget;

    try {
      double m1 = m_guess;
      try {
        const double hi = positive_reach(curve, o.fit_lo / m_guess, o.fit_hi / m_guess);
        m1 = mass_fit(curve, o.fit_lo / m_guess, hi).m;
        if (!(m1 > 0.0)) throw NumericalError("non-positive first-pass mass");
      } catch (const std::exception&) {
        row.flags.push_back("pass1_failed");
        m1 = m_guess;
      }
      const double lo = o.fit_lo / m1;
      double hi = o.fit_hi / m1;
      if (hi > r_max) {
        hi = r_max;
        row.flags.push_back("window_clipped");
      }
      const double reach = positive_reach(curve, lo, hi);
      if (reach < hi - 0.5) {
        hi = reach;
        row.flags.push_back("window_shortened");
      }
      const MassFit f = mass_fit(curve, lo, hi);
      row.value.mean = f.m;
      row.value.std_error = f.m_error;
      row.value.count = o.budget;
      row.extra.emplace_back("m_pass1", m1);
      row.extra.emplace_back("fit_r_lo", f.r_lo);
      row.extra.emplace_back("fit_r_hi", f.r_hi);
      row.extra.emplace_back("fit_points", static_cast<double>(f.points));
      row.extra.emplace_back("chi2_per_dof", f.dof ? f.chi2 / f.dof : 0.0);
      if (!f.slope_monotone) row.flags.push_back("slope_not_monotone");
      if (!(f.m > 0.0)) throw NumericalError("non-positive mass");
      if (k.dim() == 2) row.extra.emplace_back("m_times_eps_pow_minus_half", f.m / std::sqrt(e));
      fe.push_back(e);
      fm.push_back(f.m);
      fs.push_back(f.m_error);
    } catch (const std::exception& ex) {
      row.flags.push_back(std::string("fit_failed: ") + ex.what());
      row.value.mean = std::nan("");
    }
    out.rows.push_back(std::move(row));
  }

  out.summary.emplace_back("mode", o.mode == MassMode::bernoulli_surrogate ? "bernoulli-surrogate"
                                                                           : "pinning-exact");
  out.summary.emplace_back("curve", o.curve == CurveKind::slab ? "slab" : "axis");
  out.summary.emplace_back("trap_mapping", o.mapping == TrapMapping::standard
                                               ? (k.dim() == 2 ? "c*eps/sqrt|log eps|" : "c*eps")
                                               : "c*eps");
  out.summary.emplace_back("trap_constant", format_number(o.mapping_constant));
  out.summary.emplace_back("nmax_policy",
                           o.nmax_policy == NmaxPolicy::diffusive ? "diffusive" : "linear");
  out.summary.emplace_back("fit_window", format_number(o.fit_lo) + ":" + format_number(o.fit_hi) +
                                             " correlation lengths");
  const bool all_positive = std::all_of(fs.begin(), fs.end(), [](double s) { return s > 0.0; });
  if (fe.size() >= 3) {
    out.fit = fit_exponent(fe, fm, all_positive ? std::span<const double>(fs)
                                                : std::span<const double>{});
    out.summary.emplace_back("exponent", format_number(out.fit.slope));
    out.summary.emplace_back("exponent_stderr", format_number(out.fit.slope_error));
    out.summary.emplace_back("fit_points", format_number(static_cast<std::uint64_t>(fe.size())));
  } else {
    out.summary.emplace_back("exponent", "nan");
    out.summary.emplace_back("exponent_stderr", "nan");
    out.summary.emplace_back("fit_points", format_number(static_cast<std::uint64_t>(fe.size())));
  }
  if (k.dim() == 2) {
    // Along a decreasing grid, m eps^{-1/2} = |log eps|^{-power} must fall.
    bool monotone = fe.size() == eps.size() && fe.size() >= 2;
    for (std::size_t i = 1; monotone && i < fe.size(); ++i) {
      if (!(fm[i] / std::sqrt(fe[i]) < fm[i - 1] / std::sqrt(fe[i - 1]))) monotone = false;
    }
    out.summary.emplace_back("diag_m_eps_pow_minus_half_increasing_in_eps",
                             monotone ? "true" : "false");
  }
  return out;
}

ScanResult variance_scan(const StepKernel& k, std::span<const double> eps,
                         const VarianceScanOptions& o, std::uint64_t seed, int jobs) {
  check_epsilon_grid(eps);
  if (!(o.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  for (double e : eps) {
    if (o.radius && *o.radius < o.policy.radius_for(e)) {
      throw std::invalid_argument("box radius " + std::to_string(*o.radius) +
                                  " violates the box policy " + o.policy.describe() +
                                  " at epsilon " + format_number(e));
    }
  }
  const double target = variance_slope_target(k);
  ScanResult out;
  out.quantity = "variance";
  std::vector<double> v, s;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double e = eps[i];
    const int radius = o.radius ? *o.radius : o.policy.radius_for(e);
    const Region lambda = Region::centered_box(k, radius);
    ScanRow row;
    row.epsilon = e;
    row.value = variance_origin(lambda, e, o.plan, derive_seed(seed, i), jobs);
    row.n_used = o.plan.samples;
    const double le = std::abs(std::log(e));
    row.extra = {{"radius", radius},
                 {"sites", static_cast<double>(lambda.alive_count())},
                 {"offset", row.value.mean - target * le}};
    if (o.cross_check) {
      const long n0 = static_cast<long>(std::ceil(std::pow(le, o.eta) / e));
      row.extra.emplace_back("n0", static_cast<double>(n0));
      row.extra.emplace_back("green_n0_over_beta", green_nstep(k, n0) / k.beta_eff());
    }
    v.push_back(row.value.mean);
    s.push_back(row.value.std_error);
    out.rows.push_back(std::move(row));
  }
  const bool all_positive = std::all_of(s.begin(), s.end(), [](double x) { return x > 0.0; });
  if (eps.size() >= 3) {
    out.fit = fit_variance_slope(eps, v, all_positive ? std::span<const double>(s)
                                                      : std::span<const double>{});
  }
  out.summary.emplace_back("box_policy", o.radius ? "explicit radius " + std::to_string(*o.radius)
                                                  : o.policy.describe());
  out.summary.emplace_back("slope", eps.size() >= 3 ? format_number(out.fit.slope) : "nan");
  out.summary.emplace_back("slope_stderr",
                           eps.size() >= 3 ? format_number(out.fit.slope_error) : "nan");
  out.summary.emplace_back("target_slope", format_number(target));
  out.summary.emplace_back(
      "relative_deviation",
      eps.size() >= 3 ? format_number(std::abs(out.fit.slope - target) / target) : "nan");
  out.summary.emplace_back("eta", format_number(o.eta));
  return out;
}

}  // namespace pinfield
