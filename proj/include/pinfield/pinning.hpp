#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pinfield/green.hpp"
#include "pinfield/rng.hpp"
#include "pinfield/stats.hpp"

namespace pinfield {

/// Pinned set A on the alive sites of a base region Lambda.
struct PinState {
  Region lambda;
  std::vector<std::uint8_t> pinned;  // per slot of lambda
  double epsilon = 0.0;
  std::size_t sweeps = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t pin_count() const;
  std::vector<Point> pinned_sites() const;
  /// Lambda \ A.
  Region alive_region() const;
};

/// nu(A) for every subset A of a pin window W inside Lambda. Subset bit i
/// corresponds to window()[i].
struct ExactPinTable {
  std::vector<Point> window;
  double epsilon = 0.0;
  std::vector<double> probability;  // by subset mask
  std::vector<double> log_weight;   // log eps^|A| Z_{Lambda \ A}
  double log_partition = 0.0;

  std::size_t size() const noexcept { return probability.size(); }
  /// P(window()[bit] pinned).
  double marginal(std::size_t bit) const;
  /// nu(A cap B = empty) for one mask B.
  double empty_probability(std::uint64_t b) const;
  /// nu(A cap B = empty) for every mask B.
  std::vector<double> empty_probabilities() const;
};

/// Exact enumeration over subsets of a pin window W of at most 20 sites.
/// Sites of Lambda outside W are never pinned; they are integrated out once
/// through the Schur complement of (I - P) on W.
class PinEnumerator {
 public:
  PinEnumerator(const Region& lambda, std::vector<Point> window);
  /// Window = every alive site of lambda (at most 16 sites).
  static PinEnumerator full(const Region& lambda);
  ~PinEnumerator();
  PinEnumerator(PinEnumerator&&) noexcept;

  const std::vector<Point>& window() const noexcept { return window_; }
  const Region& lambda() const noexcept { return lambda_; }

  ExactPinTable table(double epsilon) const;
  /// Raw killed Green function G_{Lambda \ A}(x, y) (visits) for every mask A.
  std::vector<double> green_by_subset(const Point& x, const Point& y) const;
  /// log det (I - P)|_{Lambda \ A} for every mask A.
  const std::vector<double>& log_det_by_subset() const noexcept { return log_det_; }

 private:
  struct Impl;
  Region lambda_;
  std::vector<Point> window_;
  std::vector<double> log_det_;
  std::unique_ptr<Impl> impl_;
};

/// nu over all subsets of Lambda (|Lambda| <= 16).
ExactPinTable exact_pin_measure(const Region& lambda, double epsilon);

/// E_nu[G_{Lambda\A}(x,y)] / beta_eff for the enumerated law.
double exact_pinned_covariance(const PinEnumerator& e, double epsilon, const Point& x,
                               const Point& y);
/// Same average with A ~ independent Bernoulli(p) on the window.
double bernoulli_window_covariance(const PinEnumerator& e, double p, const Point& x,
                                   const Point& y);

/// Probability that x is pinned given A elsewhere: eps g / (1 + eps g) with
/// g = (2 pi sigma^2)^{-1/2} and sigma^2 the conditional variance of phi_x on
/// Lambda \ (A \ {x}).
double gibbs_pin_prob(const Region& lambda, std::span<const Point> pinned, const Point& x,
                      double epsilon);
/// The density factor g(x, A) = (2 pi sigma^2)^{-1/2}.
double gibbs_density_factor(const Region& lambda, std::span<const Point> pinned, const Point& x);

enum class SamplerKind {
  automatic,  // collapsed up to kCollapsedMaxSites alive sites, augmented beyond
  collapsed,  // heat bath on A alone, conditional variance by linear solve
  augmented,  // heat bath on (phi, A) jointly; same marginal law of A
};
inline constexpr std::size_t kCollapsedMaxSites = 100;

struct ChainOptions {
  SamplerKind kind = SamplerKind::automatic;
  /// Collapsed sampler only: solve on a radius-W sub-box instead of Lambda
  /// (0 = full solve). Audited against full solves.
  int window_radius = 0;
  std::size_t audit_flips = 10;
  double audit_tolerance = 0.01;
};

/// One Markov chain with stationary law nu_Lambda^eps, started from A = empty.
/// Systematic lexicographic scan; one uniform per site per sweep.
class PinChain {
 public:
  PinChain(const Region& lambda, double epsilon, std::uint64_t seed, std::uint64_t stream,
           ChainOptions opts = {});
  ~PinChain();
  PinChain(PinChain&&) noexcept;

  void sweep();
  const std::vector<std::uint8_t>& pinned() const;
  /// Current field for the augmented sampler; empty otherwise.
  const std::vector<double>& field() const;
  std::size_t sweeps() const;
  SamplerKind kind() const;
  /// Largest relative error seen by windowed-solve audits (0 if none ran).
  double audit_max_error() const;
  std::size_t audits() const;
  PinState state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs `sweeps` sweeps of one chain (stream 0) and returns the final state.
PinState sample_pins(const Region& lambda, double epsilon, std::size_t sweeps,
                     std::uint64_t seed, ChainOptions opts = {});

struct SamplingPlan {
  std::size_t samples = 1000;          // recorded states over all chains
  std::optional<std::size_t> burnin;   // per chain; default = recorded sweeps per chain
  std::size_t thin = 1;                // sweeps between recorded states
  std::size_t chains = 1;
  std::size_t batches = 20;            // batch means per chain
  ChainOptions chain;
};

/// Runs plan.chains independent chains (chain c uses stream c of seed) and
/// evaluates `observe` on every recorded state. Returns series[obs][chain][t].
using ChainObserver =
    std::function<std::vector<double>(const PinChain& chain, std::size_t chain_index,
                                      std::size_t record_index)>;
std::vector<std::vector<std::vector<double>>> run_chains(const Region& lambda, double epsilon,
                                                         const SamplingPlan& plan,
                                                         std::uint64_t seed, int jobs,
                                                         std::size_t observables,
                                                         const ChainObserver& observe);

/// Exact Gaussian field given pins: precision beta_eff (I - P)|_{Lambda\A}.
class GaussianFieldSampler {
 public:
  explicit GaussianFieldSampler(const Region& alive);
  ~GaussianFieldSampler();
  GaussianFieldSampler(GaussianFieldSampler&&) noexcept;
  /// One draw over the alive slots of the region.
  Eigen::VectorXd draw(Engine& g) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct FieldSample {
  Box box;
  std::vector<double> phi;  // box index order; 0 on pinned and dead sites
  double at(const Point& x) const { return box.contains(x) ? phi[box.index(x)] : 0.0; }
};

FieldSample sample_field(const Region& lambda, std::span<const Point> pinned, std::uint64_t seed,
                         std::uint64_t stream = 0);

struct LatticeCheck {
  double min_ratio = 1.0;
  std::uint64_t arg_a = 0, arg_b = 0;
  std::size_t pairs = 0;
};
/// min over all subset pairs of nu(A or B) nu(A and B) / (nu(A) nu(B)); |Lambda| <= 9.
LatticeCheck check_lattice_condition(const Region& lambda, double epsilon);

/// Bernoulli densities bracketing the pin law on a window:
/// (1 - p_dense)^|B| <= nu(A cap B = empty) <= (1 - p_sparse)^|B| for every B.
struct DominationFit {
  double p_dense = 0.0;
  double p_sparse = 1.0;
  std::uint64_t dense_mask = 0, sparse_mask = 0;
};
DominationFit fit_domination(const ExactPinTable& table);

/// Sites within l-infinity distance w of the segment from 0 to distance * e_1.
std::vector<Point> segment_window(int dim, int distance, int w);

struct EmptyProbability {
  Estimate mc;
  std::optional<double> exact;  // when Lambda is small enough to enumerate
  std::size_t set_size = 0;
};
EmptyProbability empty_probability(const Region& lambda, double epsilon,
                                   std::span<const Point> b, const SamplingPlan& plan,
                                   std::uint64_t seed, int jobs = 1);

/// Rao-Blackwellized E_nu[G_{Lambda\A}(0,0)] / beta_eff.
Estimate variance_origin(const Region& lambda, double epsilon, const SamplingPlan& plan,
                         std::uint64_t seed, int jobs = 1);
/// Mean of phi_0^2 over one exact field draw per recorded pin state.
Estimate variance_origin_naive(const Region& lambda, double epsilon, const SamplingPlan& plan,
                               std::uint64_t seed, int jobs = 1);
/// Rao-Blackwellized E_nu[G_{Lambda\A}(x,y)] / beta_eff.
Estimate covariance(const Region& lambda, double epsilon, const Point& x, const Point& y,
                    const SamplingPlan& plan, std::uint64_t seed, int jobs = 1);
/// Covariances between x and every target from one solve per recorded state.
std::vector<Estimate> covariance_profile(const Region& lambda, double epsilon, const Point& x,
                                         std::span<const Point> targets,
                                         const SamplingPlan& plan, std::uint64_t seed,
                                         int jobs = 1);

enum class StabilityProbe { origin_unpinned, variance_origin };

struct StabilityRow {
  int radius = 0;
  std::size_t sites = 0;
  Estimate value;
  std::optional<double> exact;
};
/// Probe on nested centered boxes of the given (increasing) radii.
std::vector<StabilityRow> box_stability(const StepKernel& k, double epsilon,
                                        std::span<const int> radii, StabilityProbe probe,
                                        const SamplingPlan& plan, std::uint64_t seed,
                                        int jobs = 1);

}  // namespace pinfield
