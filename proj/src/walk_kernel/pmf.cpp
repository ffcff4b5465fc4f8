#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pinfield/errors.hpp"
#include "pinfield/walk_kernel.hpp"

namespace pinfield {

namespace {
constexpr double kCaptureTarget = 1.0 - 1e-12;
}

int auto_window_radius(const StepKernel& k, long n) {
  if (n <= 0) return 0;
  const double r = k.reach();
  // P(max_m |S_m,i| >= t) <= 2 exp(-t^2 / (2 n r^2)) per coordinate.
  const double t = r * std::sqrt(2.0 * static_cast<double>(n) * std::log(2.0 * k.dim() * 1e13));
  const double exact = r * static_cast<double>(n);
  return static_cast<int>(std::min(exact, std::ceil(t)));
}

PmfPropagator::PmfPropagator(const StepKernel& k, int window_radius)
    : kernel_(&k), dim_(k.dim()), window_(window_radius), pad_(window_radius + k.reach()) {
  if (window_radius < 0) throw std::invalid_argument("PmfPropagator: negative window");
  side_ = static_cast<std::size_t>(2 * pad_ + 1);
  std::size_t total = 1;
  for (int i = dim_ - 1; i >= 0; --i) {
    stride_[static_cast<std::size_t>(i)] = total;
    total *= side_;
  }
  if (total > (std::size_t{1} << 31)) {
    throw ResourceError("PmfPropagator: window of radius " + std::to_string(window_radius) +
                        " is too large in dimension " + std::to_string(dim_));
  }
  cur_.assign(total, 0.0);
  next_.assign(total, 0.0);
  for (const auto& s : k.steps()) {
    std::ptrdiff_t off = 0;
    for (int i = 0; i < dim_; ++i) {
      off += static_cast<std::ptrdiff_t>(s.x[i]) *
             static_cast<std::ptrdiff_t>(stride_[static_cast<std::size_t>(i)]);
    }
    offsets_.push_back(off);
    weights_.push_back(s.p);
  }
  cur_[padded_index(Point{})] = 1.0;
}

std::size_t PmfPropagator::padded_index(const Point& x) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    idx += static_cast<std::size_t>(x[i] + pad_) * stride_[static_cast<std::size_t>(i)];
  }
  return idx;
}

void PmfPropagator::step() {
  const long reach = kernel_->reach();
  const int a = static_cast<int>(std::min<long>(window_, (steps_ + 1) * reach));
  const std::size_t ns = offsets_.size();
  double captured = 0.0;
  // Odometer over all axes but the last; the last axis is a contiguous run.
  std::array<int, kMaxDim> c{};
  for (int i = 0; i < dim_; ++i) c[static_cast<std::size_t>(i)] = -a;
  const int last = dim_ - 1;
  for (;;) {
    Point row;
    for (int i = 0; i < last; ++i) row[i] = c[static_cast<std::size_t>(i)];
    row[last] = -a;
    const std::size_t base = padded_index(row);
    const std::size_t len = static_cast<std::size_t>(2 * a + 1);
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t idx = base + j;
      double v = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        v += weights_[s] * cur_[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) -
                                                         offsets_[s])];
      }
      next_[idx] = v;
      captured += v;
    }
    int ax = last - 1;
    while (ax >= 0 && c[static_cast<std::size_t>(ax)] == a) {
      c[static_cast<std::size_t>(ax)] = -a;
      --ax;
    }
    if (ax < 0) break;
    ++c[static_cast<std::size_t>(ax)];
  }
  std::swap(cur_, next_);
  captured_ = captured;
  ++steps_;
}

double PmfPropagator::at(const Point& x) const {
  if (norm_inf(x) > window_) return 0.0;
  return cur_[padded_index(x)];
}

std::vector<double> PmfPropagator::window_values() const {
  const Box box = Box::centered(dim_, window_);
  std::vector<double> out(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) out[i] = cur_[padded_index(box.point(i))];
  return out;
}

double PmfTable::at(const Point& x) const {
  return window.contains(x) ? values[window.index(x)] : 0.0;
}

PmfTable step_pmf_n(const StepKernel& k, int n, int window_radius) {
  if (n < 0) throw std::invalid_argument("step_pmf_n: n must be >= 0");
  const bool automatic = window_radius == 0;
  int w = automatic ? auto_window_radius(k, n) : window_radius;
  for (;;) {
    PmfPropagator prop(k, w);
    for (int m = 0; m < n; ++m) prop.step();
    if (prop.captured_mass() >= kCaptureTarget) {
      return PmfTable{Box::centered(k.dim(), w), prop.window_values(), prop.captured_mass()};
    }
    if (!automatic) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "step_pmf_n: window radius " << w << " too small for n=" << n
          << " (captured mass " << prop.captured_mass() << ")";
      throw ResourceError(msg.str());
    }
    w *= 2;
  }
}

std::vector<double> pmf_along(const StepKernel& k, long n, const Point& x) {
  if (n < 0) throw std::invalid_argument("pmf_along: n must be >= 0");
  int w = auto_window_radius(k, n);
  for (;;) {
    PmfPropagator prop(k, std::max(w, norm_inf(x)));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    out.push_back(prop.at(x));
    for (long m = 0; m < n; ++m) {
      prop.step();
      out.push_back(prop.at(x));
    }
    if (prop.captured_mass() >= kCaptureTarget) return out;
    w *= 2;
  }
}

std::vector<double> first_return_pmf(const StepKernel& k, int L) {
  if (L < 1) throw std::invalid_argument("first_return_pmf: L must be >= 1");
  const auto p = pmf_along(k, L, Point{});
  std::vector<double> q(static_cast<std::size_t>(L) + 1, 0.0);
  for (int n = 1; n <= L; ++n) {
    double v = p[static_cast<std::size_t>(n)];
    for (int l = 1; l < n; ++l) {
      v -= q[static_cast<std::size_t>(l)] * p[static_cast<std::size_t>(n - l)];
    }
    // Rounding can leave values like -1e-18 where q_n is exactly 0 (periodic kernels).
    q[static_cast<std::size_t>(n)] = v < 0.0 && v > -1e-14 ? 0.0 : v;
    if (q[static_cast<std::size_t>(n)] < 0.0) {
      throw NumericalError("first_return_pmf: negative q_" + std::to_string(n));
    }
  }
  return q;
}

double tied_down_range_mean(const StepKernel& k, int n, const Point& x) {
  if (n < 0) throw std::invalid_argument("tied_down_range_mean: n must be >= 0");
  const auto px = pmf_along(k, n, x);
  const double pn = px[static_cast<std::size_t>(n)];
  if (!(pn > 0.0)) {
    throw std::invalid_argument("tied_down_range_mean: p_n(x) = 0, bridge undefined");
  }
  if (n == 0) return 1.0;
  const auto q = first_return_pmf(k, n);
  double s = 0.0;
  for (int l = 1; l <= n; ++l) {
    s += static_cast<double>(n - l + 1) * q[static_cast<std::size_t>(l)] *
         px[static_cast<std::size_t>(n - l)];
  }
  return static_cast<double>(n) + 1.0 - s / pn;
}

}  // namespace pinfield
