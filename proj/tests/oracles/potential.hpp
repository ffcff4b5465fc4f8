#pragma once
// Plain dense-array DP for two-dimensional partial sums of the potential
// kernel, with pair averaging against parity oscillation and a Richardson
// step for the 1/N tail.

#include <cmath>
#include <vector>

#include "pinfield/walk_kernel.hpp"

namespace oracle {

/// s[N] = sum_{n <= N} (p_n(0) - p_n(x)) for N = 0..n_max (d = 2).
inline std::vector<double> potential_partial_sums(const pinfield::StepKernel& k,
                                                  const pinfield::Point& x, int n_max) {
  const int reach = k.reach();
  const int R = std::min(n_max * reach, static_cast<int>(9.0 * std::sqrt(n_max + 1.0)) * reach + 2) +
                std::max(std::abs(x[0]), std::abs(x[1]));
  const int side = 2 * R + 1;
  auto at = [&](int a, int b) { return static_cast<std::size_t>((a + R) * side + (b + R)); };
  std::vector<double> cur(static_cast<std::size_t>(side) * side, 0.0), nxt(cur.size());
  cur[at(0, 0)] = 1.0;
  std::vector<double> s(static_cast<std::size_t>(n_max) + 1);
  double acc = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    acc += cur[at(0, 0)] - cur[at(x[0], x[1])];
    s[static_cast<std::size_t>(n)] = acc;
    if (n == n_max) break;
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int a = -R; a <= R; ++a) {
      for (int b = -R; b <= R; ++b) {
        const double v = cur[at(a, b)];
        if (v == 0.0) continue;
        for (const auto& st : k.steps()) {
          const int a2 = a + st.x[0], b2 = b + st.x[1];
          if (a2 < -R || a2 > R || b2 < -R || b2 > R) continue;
          nxt[at(a2, b2)] += v * st.p;
        }
      }
    }
    cur.swap(nxt);
  }
  return s;
}

/// Limit estimate from pair-averaged partial sums at N and 2N.
inline double richardson_limit(const std::vector<double>& s, int N) {
  auto avg = [&](int n) { return 0.5 * (s[static_cast<std::size_t>(n)] + s[static_cast<std::size_t>(n) - 1]); };
  return 2.0 * avg(2 * N) - avg(N);
}

}  // namespace oracle
