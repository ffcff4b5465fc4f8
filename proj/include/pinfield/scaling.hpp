#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinfield/pinning.hpp"
#include "pinfield/stats.hpp"
#include "pinfield/walk_kernel.hpp"

namespace pinfield {

inline constexpr double kTruncationKappa = 0.1;

/// (1 - p)^{kappa n / log n}: weight left after n steps when the range is at
/// its moderate-deviation floor.
double truncation_bound(double p, long n_max, double kappa = kTruncationKappa);

struct SausageOptions {
  long n_max = 1000;
  /// Paths stop once their weight drops below this (0 = never).
  double weight_floor = 0.0;
  /// Flag the result when truncation_bound exceeds this.
  double truncation_tolerance = 1e-3;
  bool keep_samples = false;
};

struct SausageEstimate {
  Estimate value;
  double truncation_bound = 0.0;
  bool truncated = false;  // truncation bound above tolerance
  std::vector<double> samples;  // per replica, when requested
};

/// Sum over n <= n_max of E[1(X_n = x) (1-p)^{|X_[0,n]|}].
SausageEstimate sausage_green(const StepKernel& k, double p, const Point& x, std::size_t reps,
                              std::uint64_t seed, const SausageOptions& opts, int jobs = 1);

/// E[(1-p)^{|X_[0,T_x]|}; T_x <= n_max].
SausageEstimate survival_to_target(const StepKernel& k, double p, const Point& x,
                                   std::size_t reps, std::uint64_t seed,
                                   const SausageOptions& opts, int jobs = 1);

struct MassCurve {
  std::vector<double> r;
  std::vector<double> value;
  std::vector<double> error;  // standard errors; may be all zero for exact curves
};

/// Sausage Green function averaged over the 2d axis sites at distance r,
/// for r = 0..r_max, from one set of simulated paths.
MassCurve sausage_axis_curve(const StepKernel& k, double p, int r_max, std::size_t reps,
                             std::uint64_t seed, const SausageOptions& opts, int jobs = 1);
/// Slab sums: C(r) = (1/d) sum_i sum_{y : |y_i| = r} G_p(0, y). Decays at the
/// axis mass (coordinate reflections put the minimum of m(1, y) at y = 0)
/// without the power prefactor, and from far more visits.
MassCurve sausage_slab_curve(const StepKernel& k, double p, int r_max, std::size_t reps,
                             std::uint64_t seed, const SausageOptions& opts, int jobs = 1);

enum class CurveKind { slab, axis };

struct MassFit {
  double m = 0.0;
  double m_error = 0.0;
  double intercept = 0.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  std::size_t points = 0;
  double r_lo = 0.0, r_hi = 0.0;
  std::vector<double> residuals;
  /// Slopes over growing windows [r_lo, r] never drop by more than two
  /// combined standard errors.
  bool slope_monotone = true;
};

/// Least squares of -log C(r) against r over r_lo <= r <= r_hi.
MassFit mass_fit(const MassCurve& curve, double r_lo, double r_hi);

enum class TrapMapping {
  standard,  // eps / sqrt|log eps| in d = 2, eps in d >= 3
  linear,    // eps in every dimension
};
double trap_density(int dim, double epsilon, TrapMapping mapping, double constant = 1.0);
/// Continuum guess sqrt(2 k / Q_11) with k the per-step killing rate of the
/// sausage: p in d >= 3, p 2 pi sqrt(det Q) / log(1/p) in d = 2.
double mass_guess(const StepKernel& k, double p);

enum class NmaxPolicy {
  diffusive,  // n_max = factor * d / m_guess^2
  linear,     // n_max = factor / m_guess
};

struct ScanRow {
  double epsilon = 0.0;
  Estimate value;
  std::size_t n_used = 0;
  std::vector<std::string> flags;
  std::vector<std::pair<std::string, double>> extra;

  double extra_value(const std::string& key) const;
};

struct ScanResult {
  std::string quantity;
  std::vector<ScanRow> rows;
  LinearFit fit;
  std::vector<std::pair<std::string, std::string>> summary;

  std::string summary_value(const std::string& key) const;
};

enum class MassMode { bernoulli_surrogate, pinning_exact };

struct MassScanOptions {
  MassMode mode = MassMode::bernoulli_surrogate;
  CurveKind curve = CurveKind::slab;
  std::size_t budget = 20000;  // replicas (surrogate) or recorded pin states (pinning)
  NmaxPolicy nmax_policy = NmaxPolicy::diffusive;
  double nmax_factor = 20.0;
  double fit_lo = 3.0, fit_hi = 6.0;  // window in correlation lengths
  TrapMapping mapping = TrapMapping::standard;
  double mapping_constant = 1.0;
  double weight_floor = 1e-12;
  SamplingPlan pin_plan;  // pinning mode only
};

/// Per-epsilon mass from a two-pass fit (window from the guess, then from
/// the first fit), and the exponent from log m vs log eps.
ScanResult mass_scan(const StepKernel& k, std::span<const double> eps, const MassScanOptions& opts,
                     std::uint64_t seed, int jobs = 1);

/// Slope of log m against log eps.
LinearFit fit_exponent(std::span<const double> eps, std::span<const double> m,
                       std::span<const double> m_error = {});

struct BoxPolicy {
  double c = 2.0;       // radius >= c eps^{-1/2} |log eps|
  int min_radius = 8;
  int radius_for(double epsilon) const;
  std::string describe() const;
};

struct VarianceScanOptions {
  BoxPolicy policy;
  std::optional<int> radius;  // explicit radius; refused below the policy floor
  SamplingPlan plan;
  double eta = 3.0;           // cross-check horizon n0 = eps^{-1} |log eps|^eta
  bool cross_check = true;
};

/// Rao-Blackwellized variance at the origin per epsilon, fitted against |log eps|.
ScanResult variance_scan(const StepKernel& k, std::span<const double> eps,
                         const VarianceScanOptions& opts, std::uint64_t seed, int jobs = 1);

/// Slope of v against |log eps|.
LinearFit fit_variance_slope(std::span<const double> eps, std::span<const double> v,
                             std::span<const double> v_error = {});
/// 1 / (2 pi beta_eff sqrt(det Q)).
double variance_slope_target(const StepKernel& k);

/// Strictly decreasing, all in (0, 1).
void check_epsilon_grid(std::span<const double> eps);

}  // namespace pinfield
