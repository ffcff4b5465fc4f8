#include "pinfield/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace pinfield {

Point make_point(std::initializer_list<int> coords) {
  if (coords.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("make_point: too many coordinates");
  }
  Point p;
  std::copy(coords.begin(), coords.end(), p.c.begin());
  return p;
}

Point axis_point(int axis, int length) {
  Point p;
  p[axis] = length;
  return p;
}

int norm_inf(const Point& p) {
  int m = 0;
  for (int v : p.c) m = std::max(m, std::abs(v));
  return m;
}

long norm1(const Point& p) {
  long s = 0;
  for (int v : p.c) s += std::abs(v);
  return s;
}

double norm2(const Point& p) {
  double s = 0.0;
  for (int v : p.c) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

bool is_origin(const Point& p) {
  return std::all_of(p.c.begin(), p.c.end(), [](int v) { return v == 0; });
}

std::string format_point(const Point& p, int dim) {
  std::string out;
  for (int i = 0; i < dim; ++i) {
    if (i) out += ';';
    out += std::to_string(p[i]);
  }
  return out;
}

std::size_t PointHash::operator()(const Point& p) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (int v : p.c) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) + 0x9e3779b97f4a7c15ULL +
         (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

Box::Box(int dim, Point lo, Point hi) : dim_(dim), lo_(lo), hi_(hi) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Box: dimension out of range");
  for (int i = dim; i < kMaxDim; ++i) lo_[i] = hi_[i] = 0;
  size_ = 1;
  for (int i = dim - 1; i >= 0; --i) {
    if (hi_[i] < lo_[i]) throw std::invalid_argument("Box: empty extent");
    stride_[static_cast<std::size_t>(i)] = size_;
    size_ *= static_cast<std::size_t>(hi_[i] - lo_[i] + 1);
  }
}

Box Box::centered(int dim, int radius) {
  if (radius < 0) throw std::invalid_argument("Box: negative radius");
  Point lo, hi;
  for (int i = 0; i < dim; ++i) {
    lo[i] = -radius;
    hi[i] = radius;
  }
  return Box(dim, lo, hi);
}

Box Box::corner(int dim, int side) {
  if (side < 1) throw std::invalid_argument("Box: side must be >= 1");
  Point lo, hi;
  for (int i = 0; i < dim; ++i) hi[i] = side - 1;
  return Box(dim, lo, hi);
}

bool Box::contains(const Point& p) const noexcept {
  for (int i = 0; i < dim_; ++i) {
    if (p[i] < lo_[i] || p[i] > hi_[i]) return false;
  }
  for (int i = dim_; i < kMaxDim; ++i) {
    if (p[i] != 0) return false;
  }
  return true;
}

std::size_t Box::index(const Point& p) const noexcept {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    idx += static_cast<std::size_t>(p[i] - lo_[i]) * stride_[static_cast<std::size_t>(i)];
  }
  return idx;
}

Point Box::point(std::size_t index) const noexcept {
  Point p;
  for (int i = 0; i < dim_; ++i) {
    const auto s = stride_[static_cast<std::size_t>(i)];
    p[i] = lo_[i] + static_cast<int>(index / s);
    index %= s;
  }
  return p;
}

VisitedSet::VisitedSet(int dim, int radius)
    : grid_(Box::centered(dim, radius)), stamp_(grid_.size(), 0) {}

VisitedSet VisitedSet::for_walk(int dim, long steps, int reach) {
  constexpr double kMaxCells = 8.0e6;
  const double cap = 0.5 * (std::pow(kMaxCells, 1.0 / dim) - 1.0);
  const double want = static_cast<double>(steps) * std::max(reach, 1);
  return VisitedSet(dim, static_cast<int>(std::max(1.0, std::min(want, cap))));
}

void VisitedSet::clear() {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0u);
    epoch_ = 1;
  }
  overflow_.clear();
  count_ = 0;
}

bool VisitedSet::insert(const Point& p) {
  if (grid_.contains(p)) {
    auto& s = stamp_[grid_.index(p)];
    if (s == epoch_) return false;
    s = epoch_;
    ++count_;
    return true;
  }
  if (overflow_.insert(p).second) {
    ++count_;
    return true;
  }
  return false;
}

bool VisitedSet::contains(const Point& p) const {
  if (grid_.contains(p)) return stamp_[grid_.index(p)] == epoch_;
  return overflow_.count(p) != 0;
}

}  // namespace pinfield
