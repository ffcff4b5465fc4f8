#include <stdexcept>

#include "pinfield/green.hpp"

namespace pinfield {

GreenProbe green_killed(const Region& r, const Point& x, const Point& y, SolverOptions opts) {
  auto sx = r.slot(x);
  if (!sx) throw std::invalid_argument("green_killed: source " + format_point(x, r.dim()) + " is dead");
  if (!r.alive(y)) throw std::invalid_argument("green_killed: target " + format_point(y, r.dim()) + " is dead");
  KilledGreenSolver solver(r, opts);
  const auto col = solver.column(y);
  GreenProbe p;
  p.x = x;
  p.y = y;
  p.visits = col.g(static_cast<Eigen::Index>(*sx));
  p.value = p.visits / r.beta_eff();
  p.residual = col.residual;
  return p;
}

GreenProbe green_box_origin(const StepKernel& k, int R, SolverOptions opts) {
  if (k.dim() != 2) throw std::invalid_argument("green_box_origin: requires d = 2");
  if (R < 0) throw std::invalid_argument("green_box_origin: R must be >= 0");
  return green_killed(Region::centered_box(k, R), Point{}, Point{}, opts);
}

ObstacleGreen green_one_obstacle(const StepKernel& k, const Point& x, long n_max) {
  if (k.dim() != 2) throw std::invalid_argument("green_one_obstacle: requires d = 2");
  if (is_origin(x)) throw std::invalid_argument("green_one_obstacle: obstacle must differ from 0");
  ObstacleGreen o;
  const auto ap = potential_kernel(k, x, n_max);
  const auto am = potential_kernel(k, -x, n_max);
  o.a_plus = ap.value;
  o.a_minus = am.value;
  o.value = ap.value + am.value;
  o.tail_estimate = ap.tail_estimate + am.tail_estimate;
  return o;
}

double green_nstep(const StepKernel& k, long n) {
  if (n < 0) throw std::invalid_argument("green_nstep: n must be >= 0");
  const auto p = pmf_along(k, n, Point{});
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double hitting_prob(const Region& r, std::span<const Point> target, const Point& x,
                    SolverOptions opts) {
  if (target.empty()) throw std::invalid_argument("hitting_prob: empty target");
  for (const auto& t : target) {
    if (!r.box().contains(t)) throw std::invalid_argument("hitting_prob: target outside the box");
  }
  if (!r.alive(x)) throw std::invalid_argument("hitting_prob: start site is dead");
  for (const auto& t : target) {
    if (t == x) return 1.0;
  }
  // Unknowns live on alive \ target; the target enters through the rhs.
  const Region rest = r.with_dead(target);
  const auto sx = rest.slot(x);
  const auto& k = r.kernel();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rest.alive_count()));
  std::vector<std::uint8_t> is_target(r.box().size(), 0);
  for (const auto& t : target) is_target[r.box().index(t)] = 1;
  for (std::size_t i = 0; i < rest.alive_count(); ++i) {
    const Point& z = rest.site(i);
    for (const auto& s : k.steps()) {
      const Point w = z + s.x;
      if (r.box().contains(w) && is_target[r.box().index(w)]) rhs(static_cast<Eigen::Index>(i)) += s.p;
    }
  }
  if (rhs.norm() == 0.0) return 0.0;
  KilledGreenSolver solver(rest, opts);
  return solver.solve(rhs).g(static_cast<Eigen::Index>(*sx));
}

double conditional_variance(const Region& r, const Point& x, SolverOptions opts) {
  return green_killed(r, x, x, opts).value;
}

}  // namespace pinfield
