#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <unordered_set>
#include <vector>

namespace pinfield {

inline constexpr int kMaxDim = 4;

/// Integer lattice vector. Coordinates past the active dimension stay 0.
struct Point {
  std::array<int, kMaxDim> c{};

  constexpr int& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  constexpr int operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  friend constexpr Point operator+(Point a, const Point& b) {
    for (std::size_t i = 0; i < kMaxDim; ++i) a.c[i] += b.c[i];
    return a;
  }
  friend constexpr Point operator-(Point a, const Point& b) {
    for (std::size_t i = 0; i < kMaxDim; ++i) a.c[i] -= b.c[i];
    return a;
  }
  friend constexpr Point operator-(Point a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

Point make_point(std::initializer_list<int> coords);
Point axis_point(int axis, int length);
int norm_inf(const Point& p);
long norm1(const Point& p);
double norm2(const Point& p);
bool is_origin(const Point& p);
/// "a;b;c" using the first dim coordinates.
std::string format_point(const Point& p, int dim);

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

/// Inclusive axis-aligned box [lo, hi]; sites are indexed row-major with
/// axis 0 slowest, so index order is lexicographic order.
class Box {
 public:
  Box() = default;
  Box(int dim, Point lo, Point hi);
  static Box centered(int dim, int radius);
  /// Side-s box {0..s-1}^d.
  static Box corner(int dim, int side);

  int dim() const noexcept { return dim_; }
  const Point& lo() const noexcept { return lo_; }
  const Point& hi() const noexcept { return hi_; }
  int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t size() const noexcept { return size_; }
  bool contains(const Point& p) const noexcept;
  std::size_t index(const Point& p) const noexcept;
  Point point(std::size_t index) const noexcept;

 private:
  int dim_ = 0;
  Point lo_{}, hi_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

/// Set of lattice sites with cheap reset. A dense stamp grid covers a box
/// around the origin; sites outside it go to a hash set.
class VisitedSet {
 public:
  VisitedSet(int dim, int radius);
  /// Radius sized for an n-step walk with the given per-step reach, capped
  /// so the stamp grid stays around 8M cells.
  static VisitedSet for_walk(int dim, long steps, int reach);

  void clear();
  /// Returns true if p was not yet in the set.
  bool insert(const Point& p);
  bool contains(const Point& p) const;
  std::size_t size() const noexcept { return count_; }

 private:
  Box grid_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 1;
  std::unordered_set<Point, PointHash> overflow_;
  std::size_t count_ = 0;
};

}  // namespace pinfield
