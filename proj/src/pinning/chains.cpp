#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "pinfield/errors.hpp"
#include "pinfield/pinning.hpp"

namespace pinfield {

namespace {
constexpr std::uint64_t kAuditStream = 0xa0d17ULL;
}

struct PinChain::Impl {
  Region lambda;
  double epsilon;
  std::uint64_t seed, stream;
  ChainOptions opts;
  SamplerKind kind;
  std::size_t n;
  std::vector<std::uint8_t> pinned;
  std::vector<double> phi;
  std::size_t sweeps = 0;
  Engine rng;
  Engine audit_rng;
  double audit_max = 0.0;
  std::size_t audits = 0;

  // collapsed
  Eigen::MatrixXd dense_m;
  // augmented
  std::vector<std::size_t> nbr_start, nbr_slot;
  std::vector<double> nbr_p;
  double tau = 0.0, stay_scale = 0.0;
  std::normal_distribution<double> normal{0.0, 1.0};

  Impl(const Region& l, double eps, std::uint64_t sd, std::uint64_t st, ChainOptions o)
      : lambda(l), epsilon(eps), seed(sd), stream(st), opts(o), n(l.alive_count()),
        pinned(n, 0), rng(derive_seed(sd, st)), audit_rng(derive_seed(derive_seed(sd, st), kAuditStream)) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("PinChain: epsilon must be finite and >= 0");
    kind = o.kind;
    if (kind == SamplerKind::automatic) {
      kind = (n <= kCollapsedMaxSites || o.window_radius > 0) ? SamplerKind::collapsed
                                                              : SamplerKind::augmented;
    }
    if (kind == SamplerKind::collapsed) {
      if (n <= 400) dense_m = killed_matrix_dense(lambda);
    } else {
      const auto& k = lambda.kernel();
      nbr_start.push_back(0);
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& s : k.steps()) {
          if (is_origin(s.x)) continue;
          if (auto j = lambda.slot(lambda.site(i) + s.x)) {
            nbr_slot.push_back(*j);
            nbr_p.push_back(s.p);
          }
        }
        nbr_start.push_back(nbr_slot.size());
      }
      const double diag = 1.0 - k.origin_mass();
      tau = lambda.beta_eff() * diag;
      stay_scale = 1.0 / diag;
      phi.assign(n, 0.0);
    }
  }

  double variance_full(std::size_t i) const {
    if (dense_m.size() > 0) {
      std::vector<Eigen::Index> idx;
      Eigen::Index pos = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) pos = static_cast<Eigen::Index>(idx.size());
        if (!pinned[j] || j == i) idx.push_back(static_cast<Eigen::Index>(j));
      }
      const auto m = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd sub(m, m);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = dense_m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(sub);
      if (llt.info() != Eigen::Success) throw NumericalError("PinChain: conditional precision not SPD");
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e(pos) = 1.0;
      return llt.solve(e)(pos) / lambda.beta_eff();
    }
    std::vector<Point> dead;
    for (std::size_t j = 0; j < n; ++j) {
      if (pinned[j] && j != i) dead.push_back(lambda.site(j));
    }
    return conditional_variance(lambda.with_dead(dead), lambda.site(i));
  }

  double variance_windowed(std::size_t i) const {
    const Point x = lambda.site(i);
    const Box& box = lambda.box();
    Point lo, hi;
    for (int a = 0; a < box.dim(); ++a) {
      lo[a] = std::max(box.lo()[a], x[a] - opts.window_radius);
      hi[a] = std::min(box.hi()[a], x[a] + opts.window_radius);
    }
    const Box sub(box.dim(), lo, hi);
    std::vector<Point> dead;
    for (std::size_t b = 0; b < sub.size(); ++b) {
      const Point p = sub.point(b);
      if (p == x) continue;
      auto s = lambda.slot(p);
      if (!s || pinned[*s]) dead.push_back(p);
    }
    return conditional_variance(Region(lambda.kernel(), sub).with_dead(dead), x);
  }

  void sweep_collapsed() {
    const bool windowed = opts.window_radius > 0;
    const std::size_t next = sweeps + 1;
    std::size_t audit_slot = n;
    if (windowed && audits < opts.audit_flips && (next & (next - 1)) == 0) {
      audit_slot = static_cast<std::size_t>(audit_rng() % n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double var = windowed ? variance_windowed(i) : variance_full(i);
      if (i == audit_slot) {
        const double full = variance_full(i);
        const double err = std::abs(var - full) / full;
        audit_max = std::max(audit_max, err);
        ++audits;
        if (err > opts.audit_tolerance) {
          throw NumericalError("PinChain: windowed conditional variance failed the audit (relative error " +
                               std::to_string(err) + " > " + std::to_string(opts.audit_tolerance) +
                               " at window radius " + std::to_string(opts.window_radius) + ")");
        }
      }
      const double eg = epsilon / std::sqrt(2.0 * std::numbers::pi * var);
      const double p = eg / (1.0 + eg);
      pinned[i] = uniform01(rng) < p ? 1 : 0;
    }
  }

  void sweep_augmented() {
    const double log_eps = std::log(epsilon);
    const double log_cont = 0.5 * std::log(2.0 * std::numbers::pi / tau);
    const double sd = 1.0 / std::sqrt(tau);
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0;
      for (std::size_t e = nbr_start[i]; e < nbr_start[i + 1]; ++e) m += nbr_p[e] * phi[nbr_slot[e]];
      m *= stay_scale;
      double p_pin = 0.0;
      if (epsilon > 0.0) {
        const double log_atom = log_eps - 0.5 * tau * m * m;
        p_pin = 1.0 / (1.0 + std::exp(log_cont - log_atom));
      }
      if (uniform01(rng) < p_pin) {
        pinned[i] = 1;
        phi[i] = 0.0;
      } else {
        pinned[i] = 0;
        phi[i] = m + sd * normal(rng);
      }
    }
  }
};

PinChain::PinChain(const Region& lambda, double epsilon, std::uint64_t seed, std::uint64_t stream,
                   ChainOptions opts)
    : impl_(std::make_unique<Impl>(lambda, epsilon, seed, stream, opts)) {}
PinChain::~PinChain() = default;
PinChain::PinChain(PinChain&&) noexcept = default;

void PinChain::sweep() {
  if (impl_->kind == SamplerKind::collapsed) {
    impl_->sweep_collapsed();
  } else {
    impl_->sweep_augmented();
  }
  ++impl_->sweeps;
}

const std::vector<std::uint8_t>& PinChain::pinned() const { return impl_->pinned; }
const std::vector<double>& PinChain::field() const { return impl_->phi; }
std::size_t PinChain::sweeps() const { return impl_->sweeps; }
SamplerKind PinChain::kind() const { return impl_->kind; }
double PinChain::audit_max_error() const { return impl_->audit_max; }
std::size_t PinChain::audits() const { return impl_->audits; }

PinState PinChain::state() const {
  PinState s{impl_->lambda, impl_->pinned, impl_->epsilon, impl_->sweeps, impl_->seed, impl_->stream};
  return s;
}

PinState sample_pins(const Region& lambda, double epsilon, std::size_t sweeps, std::uint64_t seed,
                     ChainOptions opts) {
  if (sweeps < 1) throw std::invalid_argument("sample_pins: sweeps must be >= 1");
  PinChain chain(lambda, epsilon, seed, 0, opts);
  for (std::size_t s = 0; s < sweeps; ++s) chain.sweep();
  return chain.state();
}

std::vector<std::vector<std::vector<double>>> run_chains(const Region& lambda, double epsilon,
                                                         const SamplingPlan& plan,
                                                         std::uint64_t seed, int jobs,
                                                         std::size_t observables,
                                                         const ChainObserver& observe) {
  if (plan.chains < 1) throw std::invalid_argument("sampling plan: chains must be >= 1");
  if (plan.samples < plan.chains) throw std::invalid_argument("sampling plan: samples must be >= chains");
  if (plan.thin < 1) throw std::invalid_argument("sampling plan: thin must be >= 1");
  const std::size_t per_chain = plan.samples / plan.chains;
  const std::size_t burnin = plan.burnin.value_or(per_chain * plan.thin);
  std::vector<std::vector<std::vector<double>>> series(
      observables, std::vector<std::vector<double>>(plan.chains, std::vector<double>(per_chain)));
  parallel_for(plan.chains, jobs, [&](std::size_t c, std::size_t) {
    PinChain chain(lambda, epsilon, seed, c, plan.chain);
    for (std::size_t s = 0; s < burnin; ++s) chain.sweep();
    for (std::size_t t = 0; t < per_chain; ++t) {
      for (std::size_t s = 0; s < plan.thin; ++s) chain.sweep();
      const auto v = observe(chain, c, t);
      if (v.size() != observables) throw std::logic_error("run_chains: observer arity mismatch");
      for (std::size_t o = 0; o < observables; ++o) series[o][c][t] = v[o];
    }
  });
  return series;
}

struct GaussianFieldSampler::Impl {
  double scale = 1.0;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> dense;
  std::optional<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> sparse;
  Eigen::Index n = 0;
};

GaussianFieldSampler::GaussianFieldSampler(const Region& alive) : impl_(std::make_unique<Impl>()) {
  impl_->n = static_cast<Eigen::Index>(alive.alive_count());
  impl_->scale = 1.0 / std::sqrt(alive.beta_eff());
  if (impl_->n == 0) return;
  if (alive.alive_count() <= 400) {
    impl_->dense.emplace(killed_matrix_dense(alive));
    if (impl_->dense->info() != Eigen::Success) throw NumericalError("sample_field: factorization failed");
  } else {
    impl_->sparse.emplace(killed_matrix(alive));
    if (impl_->sparse->info() != Eigen::Success) throw NumericalError("sample_field: factorization failed");
  }
}
GaussianFieldSampler::~GaussianFieldSampler() = default;
GaussianFieldSampler::GaussianFieldSampler(GaussianFieldSampler&&) noexcept = default;

Eigen::VectorXd GaussianFieldSampler::draw(Engine& g) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(impl_->n);
  for (Eigen::Index i = 0; i < impl_->n; ++i) z(i) = normal(g);
  if (impl_->n == 0) return z;
  // M = L L^T (up to a fill-reducing permutation); phi = L^{-T} z has covariance M^{-1}.
  if (impl_->dense) return impl_->scale * impl_->dense->matrixU().solve(z);
  const Eigen::VectorXd y = impl_->sparse->matrixU().solve(z);
  return impl_->scale * (impl_->sparse->permutationPinv() * y);
}

FieldSample sample_field(const Region& lambda, std::span<const Point> pinned, std::uint64_t seed,
                         std::uint64_t stream) {
  const Region alive = lambda.with_dead(pinned);
  FieldSample f{lambda.box(), std::vector<double>(lambda.box().size(), 0.0)};
  if (alive.alive_count() == 0) return f;
  GaussianFieldSampler sampler(alive);
  Engine g = make_engine(seed, stream);
  const Eigen::VectorXd phi = sampler.draw(g);
  for (std::size_t i = 0; i < alive.alive_count(); ++i) {
    f.phi[lambda.box().index(alive.site(i))] = phi(static_cast<Eigen::Index>(i));
  }
  return f;
}

}  // namespace pinfield
