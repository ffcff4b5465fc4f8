#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pinfield/walk_kernel.hpp"

namespace pinfield {

namespace {

// Integer row reduction: the rows generate Z^d iff the echelon form has d
// unit pivots.
bool generates_lattice(std::vector<std::array<long long, kMaxDim>> rows, int dim) {
  std::size_t top = 0;
  for (int col = 0; col < dim; ++col) {
    for (;;) {
      std::size_t best = rows.size();
      for (std::size_t r = top; r < rows.size(); ++r) {
        if (rows[r][col] != 0 && (best == rows.size() || std::llabs(rows[r][col]) <
                                                             std::llabs(rows[best][col]))) {
          best = r;
        }
      }
      if (best == rows.size()) return false;
      std::swap(rows[top], rows[best]);
      bool reduced = true;
      for (std::size_t r = top + 1; r < rows.size(); ++r) {
        if (rows[r][col] == 0) continue;
        const long long f = rows[r][col] / rows[top][col];
        for (int j = 0; j < dim; ++j) rows[r][j] -= f * rows[top][j];
        if (rows[r][col] != 0) reduced = false;
      }
      if (reduced) break;
    }
    if (std::llabs(rows[top][col]) != 1) return false;
    ++top;
  }
  return true;
}

bool is_aperiodic(const std::vector<KernelStep>& steps, int dim) {
  for (const auto& s : steps) {
    if (is_origin(s.x)) return true;
  }
  for (unsigned mask = 1; mask < (1u << dim); ++mask) {
    bool all_odd = true;
    for (const auto& s : steps) {
      long dot = 0;
      for (int i = 0; i < dim; ++i) {
        if (mask & (1u << i)) dot += s.x[i];
      }
      if (dot % 2 == 0) {
        all_odd = false;
        break;
      }
    }
    if (all_odd) return false;
  }
  return true;
}

}  // namespace

double StepKernel::probability(const Point& x) const {
  auto it = std::lower_bound(steps_.begin(), steps_.end(), x,
                             [](const KernelStep& s, const Point& p) { return s.x < p; });
  return (it != steps_.end() && it->x == x) ? it->p : 0.0;
}

Point StepKernel::sample(Engine& g) const {
  const double u = uniform01(g);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                       steps_.size() - 1);
  return steps_[i].x;
}

StepKernel make_kernel(const KernelSpec& spec) {
  if (spec.dim < 1 || spec.dim > kMaxDim) {
    throw std::invalid_argument("make_kernel: dimension must be in [1, " +
                                std::to_string(kMaxDim) + "]");
  }
  if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) {
    throw std::invalid_argument("make_kernel: beta must be positive");
  }
  std::map<Point, double> w;
  for (const auto& s : spec.weights) {
    if (!(s.p >= 0.0) || !std::isfinite(s.p)) {
      throw std::invalid_argument("make_kernel: weights must be finite and nonnegative");
    }
    for (int i = spec.dim; i < kMaxDim; ++i) {
      if (s.x[i] != 0) throw std::invalid_argument("make_kernel: vector exceeds dimension");
    }
    if (s.p > 0.0) w[s.x] += s.p;
  }
  double total = 0.0;
  for (const auto& [x, p] : w) total += p;
  if (!(total > 0.0)) throw std::invalid_argument("make_kernel: zero total weight");

  for (const auto& [x, p] : w) {
    auto it = w.find(-x);
    const double q = it == w.end() ? 0.0 : it->second;
    if (std::abs(p - q) > 1e-12 * total) {
      if (!spec.symmetrize) {
        throw std::invalid_argument("make_kernel: support not symmetric under negation at " +
                                    format_point(x, spec.dim) +
                                    " (set symmetrize to average p(x) and p(-x))");
      }
    }
  }
  std::map<Point, double> sym;
  for (const auto& [x, p] : w) {
    auto it = w.find(-x);
    const double q = it == w.end() ? 0.0 : it->second;
    sym[x] = spec.symmetrize ? 0.5 * (p + q) : p;
    if (spec.symmetrize) sym[-x] = 0.5 * (p + q);
  }

  StepKernel k;
  k.dim_ = spec.dim;
  k.beta_ = spec.beta;
  k.lazy_ = spec.lazify;
  for (const auto& [x, p] : sym) {
    double v = p / total;
    if (spec.lazify) v *= 0.5;
    k.steps_.push_back({x, v});
  }
  if (spec.lazify) {
    auto it = std::find_if(k.steps_.begin(), k.steps_.end(),
                           [](const KernelStep& s) { return is_origin(s.x); });
    if (it == k.steps_.end()) {
      k.steps_.push_back({Point{}, 0.5});
      std::sort(k.steps_.begin(), k.steps_.end(),
                [](const KernelStep& a, const KernelStep& b) { return a.x < b.x; });
    } else {
      it->p += 0.5;
    }
  }

  std::vector<std::array<long long, kMaxDim>> rows;
  for (const auto& s : k.steps_) {
    if (is_origin(s.x)) continue;
    std::array<long long, kMaxDim> r{};
    for (int i = 0; i < spec.dim; ++i) r[static_cast<std::size_t>(i)] = s.x[i];
    rows.push_back(r);
  }
  if (!generates_lattice(rows, spec.dim)) {
    throw std::invalid_argument("make_kernel: support does not generate the lattice Z^" +
                                std::to_string(spec.dim) + " (kernel not irreducible)");
  }

  k.q_ = Eigen::MatrixXd::Zero(spec.dim, spec.dim);
  double acc = 0.0;
  for (const auto& s : k.steps_) {
    for (int i = 0; i < spec.dim; ++i) {
      for (int j = 0; j < spec.dim; ++j) k.q_(i, j) += s.p * s.x[i] * s.x[j];
    }
    acc += s.p;
    k.cumulative_.push_back(acc);
    k.reach_ = std::max(k.reach_, norm_inf(s.x));
  }
  k.cumulative_.back() = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(k.q_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("make_kernel: covariance matrix is not positive definite");
  }
  k.det_q_ = k.q_.determinant();
  k.aperiodic_ = is_aperiodic(k.steps_, spec.dim);
  return k;
}

StepKernel simple_random_walk(int dim, bool lazify, double beta) {
  KernelSpec spec;
  spec.dim = dim;
  spec.lazify = lazify;
  spec.beta = beta;
  for (int i = 0; i < dim; ++i) {
    spec.weights.push_back({axis_point(i, 1), 1.0});
    spec.weights.push_back({axis_point(i, -1), 1.0});
  }
  return make_kernel(spec);
}

namespace {
bool parse_flag(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("kernel file: " + key + " must be 0/1/true/false");
}
}  // namespace

KernelSpec parse_kernel_spec(std::istream& in) {
  KernelSpec spec;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (std::isalpha(static_cast<unsigned char>(tok[0][0]))) {
      if (tok.size() != 2) {
        throw std::invalid_argument("kernel file line " + std::to_string(line_no) +
                                    ": expected `key value`");
      }
      const auto& key = tok[0];
      if (key == "dim") {
        spec.dim = std::stoi(tok[1]);
      } else if (key == "lazify") {
        spec.lazify = parse_flag(tok[1], key);
      } else if (key == "beta") {
        spec.beta = std::stod(tok[1]);
      } else if (key == "symmetrize") {
        spec.symmetrize = parse_flag(tok[1], key);
      } else {
        throw std::invalid_argument("kernel file line " + std::to_string(line_no) +
                                    ": unknown key `" + key + "`");
      }
      continue;
    }
    rows.push_back(std::move(tok));
    row_lines.push_back(line_no);
  }
  if (spec.dim < 1 || spec.dim > kMaxDim) {
    throw std::invalid_argument("kernel file: missing or invalid `dim` header");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(spec.dim) + 1) {
      throw std::invalid_argument("kernel file line " + std::to_string(row_lines[r]) +
                                  ": expected " + std::to_string(spec.dim) +
                                  " coordinates and a weight");
    }
    KernelStep s;
    for (int i = 0; i < spec.dim; ++i) s.x[i] = std::stoi(rows[r][static_cast<std::size_t>(i)]);
    s.p = std::stod(rows[r].back());
    spec.weights.push_back(s);
  }
  return spec;
}

KernelSpec load_kernel_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open kernel file: " + path);
  return parse_kernel_spec(in);
}

}  // namespace pinfield
