#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinfield/lattice.hpp"
#include "pinfield/rng.hpp"
#include "pinfield/stats.hpp"

namespace pinfield {

struct KernelStep {
  Point x;
  double p = 0.0;
};

/// Unnormalized kernel description, as read from a kernel file.
struct KernelSpec {
  int dim = 0;
  std::vector<KernelStep> weights;
  bool lazify = false;
  double beta = 1.0;
  bool symmetrize = false;
};

/// Symmetric finite-range step distribution p(.) with its covariance Q.
/// Immutable after construction.
class StepKernel {
 public:
  int dim() const noexcept { return dim_; }
  /// Normalized support, sorted, duplicates merged; includes the origin iff p(0) > 0.
  std::span<const KernelStep> steps() const noexcept { return steps_; }
  double probability(const Point& x) const;
  double origin_mass() const { return probability(Point{}); }
  const Eigen::MatrixXd& covariance() const noexcept { return q_; }
  double det_covariance() const noexcept { return det_q_; }
  bool lazy() const noexcept { return lazy_; }
  double beta() const noexcept { return beta_; }
  /// beta after the lazification transform (2*beta when lazy).
  double beta_eff() const noexcept { return lazy_ ? 2.0 * beta_ : beta_; }
  bool aperiodic() const noexcept { return aperiodic_; }
  /// Largest |x_i| over the support.
  int reach() const noexcept { return reach_; }

  Point sample(Engine& g) const;

 private:
  friend StepKernel make_kernel(const KernelSpec& spec);
  StepKernel() = default;

  int dim_ = 0;
  std::vector<KernelStep> steps_;
  std::vector<double> cumulative_;
  Eigen::MatrixXd q_;
  double det_q_ = 0.0;
  bool lazy_ = false;
  double beta_ = 1.0;
  bool aperiodic_ = true;
  int reach_ = 0;
};

/// Validates, optionally symmetrizes, normalizes and optionally lazifies.
/// Throws std::invalid_argument for asymmetric input without the symmetrize
/// flag, zero total weight, or a support that does not generate Z^d.
/// Periodic kernels are accepted and reported by aperiodic().
StepKernel make_kernel(const KernelSpec& spec);
StepKernel simple_random_walk(int dim, bool lazify = false, double beta = 1.0);

/// Kernel file: `#` comments, header lines `dim`, `lazify`, `beta`,
/// `symmetrize` (as `key value` or `key = value`), then one support point per
/// line as `x1 ... xd weight`.
KernelSpec parse_kernel_spec(std::istream& in);
KernelSpec load_kernel_spec(const std::string& path);

// ---- n-step laws ----

/// Window radius that holds all but 1e-13 of the mass of every path of n
/// steps (maximal Hoeffding bound), capped at the exact reach n*reach.
int auto_window_radius(const StepKernel& k, long n);

/// Dynamic-programming propagation of p_m on a fixed centered window. Mass
/// that leaves the window is dropped and tracked through captured_mass().
class PmfPropagator {
 public:
  PmfPropagator(const StepKernel& k, int window_radius);

  void step();
  long steps_taken() const noexcept { return steps_; }
  double at(const Point& x) const;
  double captured_mass() const noexcept { return captured_; }
  int window_radius() const noexcept { return window_; }
  /// Current values on the centered window box, in Box index order.
  std::vector<double> window_values() const;

 private:
  std::size_t padded_index(const Point& x) const;

  const StepKernel* kernel_;
  int dim_;
  int window_;
  int pad_;
  std::size_t side_;
  std::array<std::size_t, kMaxDim> stride_{};
  std::vector<std::ptrdiff_t> offsets_;
  std::vector<double> weights_;
  std::vector<double> cur_, next_;
  long steps_ = 0;
  double captured_ = 1.0;
};

struct PmfTable {
  Box window;
  std::vector<double> values;  // Box index order
  double captured_mass = 1.0;

  double at(const Point& x) const;
  double dropped_mass() const { return 1.0 - captured_mass; }
};

/// p_n on a centered window. window_radius = 0 picks one automatically and
/// grows it until the captured mass is >= 1 - 1e-12. An explicit window that
/// captures less throws ResourceError naming the captured mass.
PmfTable step_pmf_n(const StepKernel& k, int n, int window_radius = 0);

/// p_m(x) for m = 0..n, exact up to the (reported) dropped tail.
std::vector<double> pmf_along(const StepKernel& k, long n, const Point& x);

/// First-return probabilities q_1..q_L from the renewal recursion
/// p_n(0) = sum_{l<=n} q_l p_{n-l}(0). Index 0 holds 0.
std::vector<double> first_return_pmf(const StepKernel& k, int L);

struct PotentialKernelValue {
  double value = 0.0;          // sum_{n<=n_max} (p_n(0) - p_n(x))
  double tail_estimate = 0.0;  // local-CLT size of the omitted sum over n > n_max
  long n_max = 0;
};

/// Partial sum of the two-dimensional potential kernel, evaluated as a
/// Fourier integral on a graded Gauss-Legendre mesh.
PotentialKernelValue potential_kernel(const StepKernel& k, const Point& x, long n_max);

struct RateFunctionPoint {
  Eigen::VectorXd xi;
  Eigen::VectorXd lambda;
  double rate = 0.0;
  Eigen::MatrixXd tilted_covariance;
  int iterations = 0;
  /// det Q(xi) < 1e-2 det Q: the velocity sits close to the edge of the
  /// achievable domain and asymptotics built on it are unreliable.
  bool near_boundary = false;
};

/// Newton solve of grad log z(lambda) = xi from lambda = Q^{-1} xi with
/// backtracking. Throws NumericalError when xi is not achievable.
RateFunctionPoint rate_function(const StepKernel& k, const Eigen::VectorXd& xi);
double log_mgf(const StepKernel& k, const Eigen::VectorXd& lambda);

/// exp(-n I(x/n)) / ((2 pi n)^{d/2} sqrt(det Q(x/n))). Aperiodic kernels only.
double saddle_pmf_approx(const StepKernel& k, long n, const Point& x);

// ---- path statistics ----

struct RangeSamples {
  std::vector<long> samples;  // replica order
  Estimate mean;
};

/// |X_[0,n]| for `reps` independent walks; replica r uses stream r of seed.
RangeSamples simulate_range(const StepKernel& k, long n, std::size_t reps, std::uint64_t seed,
                            int jobs = 1);

struct TailEstimate {
  double threshold = 0.0;  // kappa n / log n
  std::size_t hits = 0;
  std::size_t reps = 0;
  double frequency = 0.0;
  double upper_bound_95 = 0.0;  // one-sided Clopper-Pearson
  std::uint64_t seed = 0;
};

TailEstimate range_tail(const StepKernel& k, long n, double kappa, std::size_t reps,
                        std::uint64_t seed, int jobs = 1);

/// Exact mean range of the bridge from 0 to x in n steps via the last-exit
/// decomposition n+1 - sum_l (n-l+1) q_l p_{n-l}(x) / p_n(x).
double tied_down_range_mean(const StepKernel& k, int n, const Point& x);

/// Number of side-K cells (translates of {1..K}^d) visited before the walk
/// leaves {-nK+1, ..., nK}^d.
std::vector<long> crossing_cells(const StepKernel& k, int n, int K, std::size_t reps,
                                 std::uint64_t seed, int jobs = 1);

}  // namespace pinfield
