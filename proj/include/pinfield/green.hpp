#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pinfield/lattice.hpp"
#include "pinfield/walk_kernel.hpp"

namespace pinfield {

/// Finite box with an alive/dead mask. Everything outside the box is dead,
/// so a step of any length that leaves the box is absorbed.
class Region {
 public:
  Region(const StepKernel& kernel, const Box& box);
  static Region centered_box(const StepKernel& kernel, int radius);

  const StepKernel& kernel() const noexcept { return *kernel_; }
  const Box& box() const noexcept { return box_; }
  int dim() const noexcept { return box_.dim(); }
  double beta_eff() const noexcept { return kernel_->beta_eff(); }

  bool alive(const Point& x) const;
  std::size_t alive_count() const noexcept { return sites_.size(); }
  /// Position of x in [0, alive_count()), if alive.
  std::optional<std::size_t> slot(const Point& x) const;
  const Point& site(std::size_t slot) const { return sites_[slot]; }
  const std::vector<Point>& alive_sites() const noexcept { return sites_; }

  /// Copy with additional dead sites (points outside the box are ignored).
  Region with_dead(std::span<const Point> dead) const;
  /// Copy keeping only the given slots of this region alive.
  Region keep_slots(std::span<const std::size_t> slots) const;

 private:
  void rebuild_sites();

  std::shared_ptr<const StepKernel> kernel_;
  Box box_;
  std::vector<std::int32_t> slot_of_;  // per box index, -1 when dead
  std::vector<Point> sites_;
};

/// (I - P) restricted to the alive sites of r, in slot order.
Eigen::SparseMatrix<double> killed_matrix(const Region& r);
Eigen::MatrixXd killed_matrix_dense(const Region& r);

struct SolverOptions {
  double tolerance = 1e-10;       // relative residual
  std::size_t dense_cutoff = 400;  // alive sites handled by dense Cholesky
};

struct SolveResult {
  Eigen::VectorXd g;
  double residual = 0.0;  // ||b - M g|| / ||b||
};

/// Factorizes (I - P)|alive once; answers many right-hand sides. All solves
/// are at beta = 1. The region must outlive the solver.
class KilledGreenSolver {
 public:
  explicit KilledGreenSolver(const Region& r, SolverOptions opts = {});
  ~KilledGreenSolver();
  KilledGreenSolver(KilledGreenSolver&&) noexcept;

  SolveResult solve(const Eigen::VectorXd& rhs) const;
  /// Column y of the killed Green function: g(x) = G(x, y) in visits.
  SolveResult column(const Point& y) const;
  const Region& region() const noexcept { return *region_; }

 private:
  struct Impl;
  const Region* region_;
  SolverOptions opts_;
  std::unique_ptr<Impl> impl_;
};

struct GreenProbe {
  Point x, y;
  double value = 0.0;   // field covariance G(x,y) / beta_eff
  double visits = 0.0;  // expected visits to y from x before absorption
  double residual = 0.0;
};

GreenProbe green_killed(const Region& r, const Point& x, const Point& y, SolverOptions opts = {});
/// Killed Green function at the center of the side-(2R+1) box (d = 2).
GreenProbe green_box_origin(const StepKernel& k, int R, SolverOptions opts = {});

struct ObstacleGreen {
  double value = 0.0;  // G_{Z^2 \ {x}}(0,0) in visits
  double a_plus = 0.0, a_minus = 0.0;
  double tail_estimate = 0.0;
};
/// a(x) + a(-x) from potential-kernel partial sums.
ObstacleGreen green_one_obstacle(const StepKernel& k, const Point& x, long n_max);

/// G^n(0,0) = sum_{m<=n} p_m(0) in visits.
double green_nstep(const StepKernel& k, long n);

/// P_x(hit target before any dead site). Target sites must be in the box.
double hitting_prob(const Region& r, std::span<const Point> target, const Point& x,
                    SolverOptions opts = {});

/// Variance of phi_x given all dead sites pinned at 0: G(x,x) / beta_eff.
double conditional_variance(const Region& r, const Point& x, SolverOptions opts = {});

}  // namespace pinfield
