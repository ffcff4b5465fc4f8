#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pinfield/errors.hpp"
#include "pinfield/pinning.hpp"

namespace pinfield {

namespace {
constexpr std::size_t kMaxWindow = 20;
constexpr std::size_t kMaxRest = 3000;
}  // namespace

std::size_t PinState::pin_count() const {
  return static_cast<std::size_t>(std::count(pinned.begin(), pinned.end(), std::uint8_t{1}));
}

std::vector<Point> PinState::pinned_sites() const {
  std::vector<Point> out;
  for (std::size_t i = 0; i < pinned.size(); ++i) {
    if (pinned[i]) out.push_back(lambda.site(i));
  }
  return out;
}

Region PinState::alive_region() const {
  const auto pins = pinned_sites();
  return lambda.with_dead(pins);
}

double ExactPinTable::marginal(std::size_t bit) const {
  double s = 0.0;
  for (std::size_t m = 0; m < probability.size(); ++m) {
    if (m & (std::size_t{1} << bit)) s += probability[m];
  }
  return s;
}

double ExactPinTable::empty_probability(std::uint64_t b) const {
  double s = 0.0;
  for (std::size_t m = 0; m < probability.size(); ++m) {
    if ((m & b) == 0) s += probability[m];
  }
  return s;
}

std::vector<double> ExactPinTable::empty_probabilities() const {
  // Zeta transform: f[S] = sum_{A subset S} nu(A); then empty(B) = f[W \ B].
  std::vector<double> f = probability;
  const std::size_t n = window.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t m = 0; m < f.size(); ++m) {
      if (m & bit) f[m] += f[m ^ bit];
    }
  }
  const std::size_t full = f.size() - 1;
  std::vector<double> out(f.size());
  for (std::size_t b = 0; b < f.size(); ++b) out[b] = f[full ^ b];
  return out;
}

struct PinEnumerator::Impl {
  std::vector<std::size_t> rest;      // lambda slots outside the window
  std::vector<std::size_t> win;       // lambda slots of the window
  Eigen::LLT<Eigen::MatrixXd> rest_llt;
  Eigen::MatrixXd t;                  // M_RR^{-1} M_RW
  Eigen::MatrixXd s;                  // Schur complement on W
  std::vector<std::int64_t> rest_pos;  // lambda slot -> row in rest, or -1
  std::vector<std::int64_t> win_pos;   // lambda slot -> bit, or -1

  Eigen::MatrixXd schur_block(std::uint64_t alive_bits, std::vector<std::size_t>& bits) const {
    bits.clear();
    for (std::size_t i = 0; i < win.size(); ++i) {
      if (alive_bits & (std::uint64_t{1} << i)) bits.push_back(i);
    }
    const auto nb = static_cast<Eigen::Index>(bits.size());
    Eigen::MatrixXd sb(nb, nb);
    for (Eigen::Index a = 0; a < nb; ++a) {
      for (Eigen::Index b = 0; b < nb; ++b) {
        sb(a, b) = s(static_cast<Eigen::Index>(bits[static_cast<std::size_t>(a)]),
                     static_cast<Eigen::Index>(bits[static_cast<std::size_t>(b)]));
      }
    }
    return sb;
  }
};

PinEnumerator::PinEnumerator(const Region& lambda, std::vector<Point> window)
    : lambda_(lambda), window_(std::move(window)), impl_(std::make_unique<Impl>()) {
  if (window_.size() > kMaxWindow) {
    throw ResourceError("PinEnumerator: pin window of " + std::to_string(window_.size()) +
                        " sites exceeds the enumeration limit of " + std::to_string(kMaxWindow));
  }
  const std::size_t n = lambda_.alive_count();
  impl_->rest_pos.assign(n, -1);
  impl_->win_pos.assign(n, -1);
  for (std::size_t i = 0; i < window_.size(); ++i) {
    auto s = lambda_.slot(window_[i]);
    if (!s) throw std::invalid_argument("PinEnumerator: window site outside Lambda");
    if (impl_->win_pos[*s] >= 0) throw std::invalid_argument("PinEnumerator: repeated window site");
    impl_->win_pos[*s] = static_cast<std::int64_t>(i);
    impl_->win.push_back(*s);
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (impl_->win_pos[s] < 0) {
      impl_->rest_pos[s] = static_cast<std::int64_t>(impl_->rest.size());
      impl_->rest.push_back(s);
    }
  }
  if (impl_->rest.size() > kMaxRest) {
    throw ResourceError("PinEnumerator: " + std::to_string(impl_->rest.size()) +
                        " unpinnable sites exceed the dense limit of " + std::to_string(kMaxRest));
  }
  const Eigen::MatrixXd m = killed_matrix_dense(lambda_);
  const auto nr = static_cast<Eigen::Index>(impl_->rest.size());
  const auto nw = static_cast<Eigen::Index>(impl_->win.size());
  auto sub = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            m(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
      }
    }
    return out;
  };
  double log_det_rest = 0.0;
  const Eigen::MatrixXd mww = sub(impl_->win, impl_->win);
  if (nr > 0) {
    impl_->rest_llt.compute(sub(impl_->rest, impl_->rest));
    if (impl_->rest_llt.info() != Eigen::Success) {
      throw NumericalError("PinEnumerator: precision matrix on unpinnable sites is singular");
    }
    const Eigen::MatrixXd mrw = sub(impl_->rest, impl_->win);
    impl_->t = impl_->rest_llt.solve(mrw);
    impl_->s = mww - mrw.transpose() * impl_->t;
    log_det_rest = 2.0 * impl_->rest_llt.matrixLLT().diagonal().array().log().sum();
  } else {
    impl_->t = Eigen::MatrixXd::Zero(0, nw);
    impl_->s = mww;
  }

  const std::size_t subsets = std::size_t{1} << window_.size();
  const std::uint64_t full = subsets - 1;
  log_det_.assign(subsets, 0.0);
  std::vector<std::size_t> bits;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    const Eigen::MatrixXd sb = impl_->schur_block(full ^ mask, bits);
    double ld = log_det_rest;
    if (sb.rows() > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(sb);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("PinEnumerator: singular precision submatrix (internal error)");
      }
      ld += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    log_det_[mask] = ld;
  }
}

PinEnumerator PinEnumerator::full(const Region& lambda) {
  if (lambda.alive_count() > 16) {
    throw ResourceError("exact_pin_measure: |Lambda| = " + std::to_string(lambda.alive_count()) +
                        " exceeds the enumeration limit of 16 sites");
  }
  return PinEnumerator(lambda, lambda.alive_sites());
}

PinEnumerator::~PinEnumerator() = default;
PinEnumerator::PinEnumerator(PinEnumerator&&) noexcept = default;

ExactPinTable PinEnumerator::table(double epsilon) const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("exact_pin_measure: epsilon must be finite and >= 0");
  }
  ExactPinTable t;
  t.window = window_;
  t.epsilon = epsilon;
  const std::size_t subsets = log_det_.size();
  const double n = static_cast<double>(lambda_.alive_count());
  const double log_eps = std::log(epsilon);
  const double log_site = 0.5 * std::log(2.0 * std::numbers::pi / lambda_.beta_eff());
  t.log_weight.resize(subsets);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < subsets; ++m) {
    const int k = std::popcount(m);
    const double pins = k == 0 ? 0.0 : k * log_eps;
    t.log_weight[m] = pins + (n - k) * log_site - 0.5 * log_det_[m];
    top = std::max(top, t.log_weight[m]);
  }
  double z = 0.0;
  for (double lw : t.log_weight) z += std::exp(lw - top);
  t.log_partition = top + std::log(z);
  t.probability.resize(subsets);
  for (std::size_t m = 0; m < subsets; ++m) {
    t.probability[m] = std::exp(t.log_weight[m] - t.log_partition);
  }
  return t;
}

std::vector<double> PinEnumerator::green_by_subset(const Point& x, const Point& y) const {
  const auto sx = lambda_.slot(x);
  const auto sy = lambda_.slot(y);
  if (!sx || !sy) throw std::invalid_argument("green_by_subset: site outside Lambda");
  const auto& im = *impl_;
  const bool x_win = im.win_pos[*sx] >= 0, y_win = im.win_pos[*sy] >= 0;
  const std::size_t subsets = log_det_.size();
  const std::uint64_t full = subsets - 1;
  std::vector<double> out(subsets, 0.0);

  double g_rest = 0.0;
  if (!x_win && !y_win) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(im.rest.size()));
    e(im.rest_pos[*sy]) = 1.0;
    g_rest = im.rest_llt.solve(e)(im.rest_pos[*sx]);
  }
  std::vector<std::size_t> bits;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    if (x_win && (mask >> im.win_pos[*sx]) & 1u) continue;
    if (y_win && (mask >> im.win_pos[*sy]) & 1u) continue;
    const Eigen::MatrixXd sb = im.schur_block(full ^ mask, bits);
    const auto nb = sb.rows();
    if (nb == 0) {
      out[mask] = g_rest;
      continue;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sb);
    auto pos_in_b = [&](std::size_t slot) {
      const auto bit = static_cast<std::size_t>(im.win_pos[slot]);
      return static_cast<Eigen::Index>(std::lower_bound(bits.begin(), bits.end(), bit) - bits.begin());
    };
    auto t_row = [&](std::size_t slot) {
      Eigen::VectorXd v(nb);
      for (Eigen::Index a = 0; a < nb; ++a) {
        v(a) = im.t(im.rest_pos[slot], static_cast<Eigen::Index>(bits[static_cast<std::size_t>(a)]));
      }
      return v;
    };
    if (x_win && y_win) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(nb);
      e(pos_in_b(*sy)) = 1.0;
      out[mask] = llt.solve(e)(pos_in_b(*sx));
    } else if (x_win) {
      out[mask] = -llt.solve(t_row(*sy))(pos_in_b(*sx));
    } else if (y_win) {
      out[mask] = -llt.solve(t_row(*sx))(pos_in_b(*sy));
    } else {
      const Eigen::VectorXd ty = t_row(*sy);
      out[mask] = g_rest + t_row(*sx).dot(llt.solve(ty));
    }
  }
  return out;
}

ExactPinTable exact_pin_measure(const Region& lambda, double epsilon) {
  return PinEnumerator::full(lambda).table(epsilon);
}

double exact_pinned_covariance(const PinEnumerator& e, double epsilon, const Point& x,
                               const Point& y) {
  const auto t = e.table(epsilon);
  const auto g = e.green_by_subset(x, y);
  double s = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) s += t.probability[m] * g[m];
  return s / e.lambda().beta_eff();
}

double bernoulli_window_covariance(const PinEnumerator& e, double p, const Point& x,
                                   const Point& y) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli_window_covariance: p in [0,1]");
  const auto g = e.green_by_subset(x, y);
  const int n = static_cast<int>(e.window().size());
  double s = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const int k = std::popcount(m);
    s += std::pow(p, k) * std::pow(1.0 - p, n - k) * g[m];
  }
  return s / e.lambda().beta_eff();
}

double gibbs_density_factor(const Region& lambda, std::span<const Point> pinned, const Point& x) {
  if (!lambda.alive(x)) throw std::invalid_argument("gibbs_pin_prob: site outside Lambda");
  std::vector<Point> others;
  for (const auto& p : pinned) {
    if (p != x) others.push_back(p);
  }
  const double var = conditional_variance(lambda.with_dead(others), x);
  return 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
}

double gibbs_pin_prob(const Region& lambda, std::span<const Point> pinned, const Point& x,
                      double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("gibbs_pin_prob: epsilon must be >= 0");
  if (epsilon == 0.0) return 0.0;
  const double eg = epsilon * gibbs_density_factor(lambda, pinned, x);
  return eg / (1.0 + eg);
}

LatticeCheck check_lattice_condition(const Region& lambda, double epsilon) {
  if (lambda.alive_count() > 9) {
    throw ResourceError("check_lattice_condition: |Lambda| = " +
                        std::to_string(lambda.alive_count()) + " exceeds 9 sites");
  }
  const auto t = exact_pin_measure(lambda, epsilon);
  LatticeCheck c;
  c.min_ratio = std::numeric_limits<double>::infinity();
  const std::size_t n = t.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double lr = (t.log_weight[a | b] + t.log_weight[a & b]) -
                        (t.log_weight[a] + t.log_weight[b]);
      const double r = std::exp(lr);
      if (r < c.min_ratio) {
        c.min_ratio = r;
        c.arg_a = a;
        c.arg_b = b;
      }
      ++c.pairs;
    }
  }
  return c;
}

DominationFit fit_domination(const ExactPinTable& table) {
  const auto empty = table.empty_probabilities();
  DominationFit f;
  f.p_dense = 0.0;
  f.p_sparse = 1.0;
  for (std::size_t b = 1; b < empty.size(); ++b) {
    const double p = 1.0 - std::pow(empty[b], 1.0 / std::popcount(b));
    if (p > f.p_dense) {
      f.p_dense = p;
      f.dense_mask = b;
    }
    if (p < f.p_sparse) {
      f.p_sparse = p;
      f.sparse_mask = b;
    }
  }
  return f;
}

}  // namespace pinfield
