#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "pinfield/walk_kernel.hpp"

namespace pinfield {

namespace {

constexpr int kGrading = 36;  // geometric refinement levels toward 0 and +-pi
constexpr int kPanelOrder = 16;

/// Gauss-Legendre nodes on [0, pi], graded geometrically toward both ends.
/// Panels are split so that a phase theta * `frequency` turns by at most
/// about two radians across one panel.
void half_axis_rule(double frequency, std::vector<double>& nodes, std::vector<double>& weights) {
  const double pi = std::numbers::pi;
  std::vector<double> breaks{0.0};
  for (int k = kGrading; k >= 2; --k) breaks.push_back(pi * std::ldexp(1.0, -k));
  breaks.push_back(pi / 2);
  for (int k = 2; k <= kGrading; ++k) breaks.push_back(pi * (1.0 - std::ldexp(1.0, -k)));
  breaks.push_back(pi);
  using Rule = boost::math::quadrature::gauss<double, kPanelOrder>;
  const auto& abs = Rule::abscissa();
  const auto& wts = Rule::weights();
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double width = breaks[b + 1] - breaks[b];
    const int pieces = std::max(1, static_cast<int>(std::ceil(frequency * width / 2.0)));
    for (int piece = 0; piece < pieces; ++piece) {
      const double a = breaks[b] + width * piece / pieces;
      const double c = piece + 1 == pieces ? breaks[b + 1] : breaks[b] + width * (piece + 1) / pieces;
      const double mid = 0.5 * (a + c), half = 0.5 * (c - a);
      for (std::size_t i = 0; i < abs.size(); ++i) {
        // Boost stores the non-negative half of a symmetric rule.
        if (abs[i] == 0.0) {
          nodes.push_back(mid);
          weights.push_back(half * wts[i]);
        } else {
          nodes.push_back(mid - half * abs[i]);
          weights.push_back(half * wts[i]);
          nodes.push_back(mid + half * abs[i]);
          weights.push_back(half * wts[i]);
        }
      }
    }
  }
}

}  // namespace

PotentialKernelValue potential_kernel(const StepKernel& k, const Point& x, long n_max) {
  if (k.dim() != 2) throw std::invalid_argument("potential_kernel: requires d = 2");
  if (n_max < 0) throw std::invalid_argument("potential_kernel: n_max must be >= 0");
  PotentialKernelValue out;
  out.n_max = n_max;
  if (is_origin(x)) return out;

  // Axis 0 over [0, pi] (the integrand is even under theta -> -theta),
  // axis 1 over [-pi, pi].
  std::vector<double> t0, w0, h1, hw1;
  half_axis_rule(std::max<double>(k.reach(), std::abs(x[0])), t0, w0);
  half_axis_rule(std::max<double>(k.reach(), std::abs(x[1])), h1, hw1);
  std::vector<double> t1, w1;
  for (std::size_t i = h1.size(); i-- > 0;) {
    t1.push_back(-h1[i]);
    w1.push_back(hw1[i]);
  }
  for (std::size_t i = 0; i < h1.size(); ++i) {
    t1.push_back(h1[i]);
    w1.push_back(hw1[i]);
  }

  // Half angles theta.v / 2 are split per axis so that 1 - cos(theta.v) =
  // 2 sin^2(theta.v / 2) stays accurate near theta = 0.
  std::vector<Point> vecs;
  std::vector<double> probs;
  for (const auto& s : k.steps()) {
    if (is_origin(s.x)) continue;
    vecs.push_back(s.x);
    probs.push_back(s.p);
  }
  vecs.push_back(x);
  const std::size_t nv = vecs.size();
  auto tables = [&](const std::vector<double>& t, int axis, std::vector<double>& sn,
                    std::vector<double>& cs) {
    sn.resize(t.size() * nv);
    cs.resize(t.size() * nv);
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t v = 0; v < nv; ++v) {
        const double h = 0.5 * t[i] * vecs[v][axis];
        sn[i * nv + v] = std::sin(h);
        cs[i * nv + v] = std::cos(h);
      }
    }
  };
  std::vector<double> s0, c0, s1, c1;
  tables(t0, 0, s0, c0);
  tables(t1, 1, s1, c1);

  const double np1 = static_cast<double>(n_max) + 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < t1.size(); ++j) {
      double u = 0.0;
      for (std::size_t v = 0; v + 1 < nv; ++v) {
        const double sh = s0[i * nv + v] * c1[j * nv + v] + c0[i * nv + v] * s1[j * nv + v];
        u += probs[v] * 2.0 * sh * sh;
      }
      const std::size_t xv = nv - 1;
      const double sx = s0[i * nv + xv] * c1[j * nv + xv] + c0[i * nv + xv] * s1[j * nv + xv];
      const double num = 2.0 * sx * sx;
      double geom;  // sum_{n=0}^{N} phi^n with phi = 1 - u
      if (u <= 0.0) {
        geom = np1;
      } else if (u <= 1.0) {
        geom = -std::expm1(np1 * std::log1p(-u)) / u;
      } else {
        geom = (1.0 - std::pow(1.0 - u, np1)) / u;
      }
      row += w1[j] * num * geom;
    }
    total += w0[i] * row;
  }
  const double pi = std::numbers::pi;
  out.value = 2.0 * total / (4.0 * pi * pi);

  const Eigen::Vector2d xv(x[0], x[1]);
  const double qx = xv.dot(k.covariance().ldlt().solve(xv));
  out.tail_estimate =
      n_max > 0 ? qx / (4.0 * pi * std::sqrt(k.det_covariance()) * static_cast<double>(n_max))
                : 0.0;
  return out;
}

}  // namespace pinfield
