#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pinfield/errors.hpp"
#include "pinfield/walk_kernel.hpp"

namespace pinfield {

namespace {

struct Tilt {
  double log_z = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Eigen::VectorXd as_vector(const Point& x, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = x[i];
  return v;
}

Tilt tilt(const StepKernel& k, const Eigen::VectorXd& lambda) {
  const int d = k.dim();
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& s : k.steps()) shift = std::max(shift, lambda.dot(as_vector(s.x, d)));
  double z = 0.0;
  Tilt t;
  t.mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : k.steps()) {
    const Eigen::VectorXd v = as_vector(s.x, d);
    const double w = s.p * std::exp(lambda.dot(v) - shift);
    z += w;
    t.mean += w * v;
    second += w * v * v.transpose();
  }
  t.mean /= z;
  t.cov = second / z - t.mean * t.mean.transpose();
  t.log_z = std::log(z) + shift;
  return t;
}

}  // namespace

double log_mgf(const StepKernel& k, const Eigen::VectorXd& lambda) {
  if (lambda.size() != k.dim()) throw std::invalid_argument("log_mgf: dimension mismatch");
  return tilt(k, lambda).log_z;
}

RateFunctionPoint rate_function(const StepKernel& k, const Eigen::VectorXd& xi) {
  const int d = k.dim();
  if (xi.size() != d) throw std::invalid_argument("rate_function: dimension mismatch");
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-10;
  Eigen::VectorXd lambda = k.covariance().ldlt().solve(xi);
  Tilt t = tilt(k, lambda);
  auto objective = [&](const Tilt& tt, const Eigen::VectorXd& l) { return tt.log_z - l.dot(xi); };
  int it = 0;
  for (;; ++it) {
    const Eigen::VectorXd grad = t.mean - xi;
    if (grad.cwiseAbs().maxCoeff() <= kTol) break;
    if (it >= kMaxIter) {
      throw NumericalError("rate_function: Newton did not converge in 50 iterations; velocity "
                           "is outside the achievable domain");
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(t.cov);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-300)) {
      throw NumericalError("rate_function: singular tilted covariance (Hessian)");
    }
    const Eigen::VectorXd dir = -ldlt.solve(grad);
    const double f0 = objective(t, lambda);
    const double slope = grad.dot(dir);
    double step = 1.0;
    Eigen::VectorXd cand;
    Tilt tc;
    // Close to the root the predicted decrease drowns in rounding of log z;
    // plain Newton is quadratically convergent there.
    const bool polish = -slope < 1e-12;
    for (int bt = 0;; ++bt) {
      if (polish) {
        cand = lambda + dir;
        tc = tilt(k, cand);
        break;
      }
      cand = lambda + step * dir;
      tc = tilt(k, cand);
      if (objective(tc, cand) <= f0 + 1e-4 * step * slope) break;
      if (bt > 60) {
        // Objective is flat to rounding; accept the full Newton step.
        cand = lambda + dir;
        tc = tilt(k, cand);
        break;
      }
      step *= 0.5;
    }
    lambda = cand;
    t = tc;
    if (!std::isfinite(lambda.norm()) || lambda.norm() > 700.0) {
      throw NumericalError("rate_function: tilt diverges; velocity is outside the achievable "
                           "domain");
    }
  }
  RateFunctionPoint out;
  out.xi = xi;
  out.lambda = lambda;
  out.rate = lambda.dot(xi) - t.log_z;
  out.tilted_covariance = t.cov;
  out.iterations = it;
  out.near_boundary = t.cov.determinant() < 1e-2 * k.det_covariance();
  return out;
}

double saddle_pmf_approx(const StepKernel& k, long n, const Point& x) {
  if (n < 1) throw std::invalid_argument("saddle_pmf_approx: n must be >= 1");
  if (!k.aperiodic()) {
    throw std::invalid_argument(
        "saddle_pmf_approx: kernel is periodic; the local CLT needs an aperiodic (lazified) "
        "kernel");
  }
  const int d = k.dim();
  Eigen::VectorXd xi(d);
  for (int i = 0; i < d; ++i) xi(i) = static_cast<double>(x[i]) / static_cast<double>(n);
  const auto rp = rate_function(k, xi);
  const double nn = static_cast<double>(n);
  return std::exp(-nn * rp.rate) /
         (std::pow(2.0 * std::numbers::pi * nn, 0.5 * d) *
          std::sqrt(rp.tilted_covariance.determinant()));
}

}  // namespace pinfield
