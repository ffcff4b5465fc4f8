#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>

#include "pinfield/errors.hpp"
#include "pinfield/green.hpp"

namespace pinfield {

Eigen::SparseMatrix<double> killed_matrix(const Region& r) {
  const auto& k = r.kernel();
  const std::size_t n = r.alive_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * k.steps().size());
  const double stay = k.origin_mass();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& x = r.site(i);
    const auto ii = static_cast<Eigen::Index>(i);
    trip.emplace_back(ii, ii, 1.0 - stay);
    for (const auto& s : k.steps()) {
      if (is_origin(s.x)) continue;
      if (auto j = r.slot(x + s.x)) trip.emplace_back(ii, static_cast<Eigen::Index>(*j), -s.p);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Eigen::MatrixXd killed_matrix_dense(const Region& r) {
  return Eigen::MatrixXd(killed_matrix(r));
}

struct KilledGreenSolver::Impl {
  Eigen::SparseMatrix<double> m;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> dense;
  std::optional<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                         Eigen::DiagonalPreconditioner<double>>>
      cg;
};

KilledGreenSolver::KilledGreenSolver(const Region& r, SolverOptions opts)
    : region_(&r), opts_(opts), impl_(std::make_unique<Impl>()) {
  impl_->m = killed_matrix(r);
  const auto n = static_cast<std::size_t>(impl_->m.rows());
  if (n == 0) return;
  if (n <= opts.dense_cutoff) {
    impl_->dense.emplace(Eigen::MatrixXd(impl_->m));
    if (impl_->dense->info() != Eigen::Success) {
      throw NumericalError("KilledGreenSolver: dense Cholesky failed (matrix not SPD)");
    }
  } else {
    impl_->cg.emplace();
    impl_->cg->setTolerance(0.1 * opts.tolerance);
    impl_->cg->setMaxIterations(static_cast<Eigen::Index>(std::max<std::size_t>(2000, 20 * n)));
    impl_->cg->compute(impl_->m);
  }
}

KilledGreenSolver::~KilledGreenSolver() = default;
KilledGreenSolver::KilledGreenSolver(KilledGreenSolver&&) noexcept = default;

SolveResult KilledGreenSolver::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != impl_->m.rows()) throw std::invalid_argument("solve: rhs size mismatch");
  SolveResult out;
  if (rhs.size() == 0) return out;
  if (impl_->dense) {
    out.g = impl_->dense->solve(rhs);
  } else {
    out.g = impl_->cg->solve(rhs);
  }
  const double bn = rhs.norm();
  out.residual = bn > 0.0 ? (rhs - impl_->m * out.g).norm() / bn : 0.0;
  if (!(out.residual <= opts_.tolerance)) {
    std::ostringstream msg;
    msg << "KilledGreenSolver: solve did not reach tolerance " << opts_.tolerance
        << " (relative residual " << out.residual << ", " << rhs.size() << " sites)";
    throw NumericalError(msg.str());
  }
  return out;
}

SolveResult KilledGreenSolver::column(const Point& y) const {
  auto s = region_->slot(y);
  if (!s) throw std::invalid_argument("KilledGreenSolver: target site is dead");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(impl_->m.rows());
  rhs(static_cast<Eigen::Index>(*s)) = 1.0;
  return solve(rhs);
}

}  // namespace pinfield
