#include "pinfield/cli/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <new>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <openssl/sha.h>

#include "pinfield/csv.hpp"
#include "pinfield/errors.hpp"
#include "pinfield/pinning.hpp"
#include "pinfield/renewal1d.hpp"
#include "pinfield/scaling.hpp"
#include "pinfield/walk_kernel.hpp"

namespace pinfield::cli {

namespace {

namespace fs = std::filesystem;

StepKernel kernel_from(const ExperimentConfig& c) {
  if (c.has("kernel")) return make_kernel(load_kernel_spec(c.text("kernel", "")));
  return simple_random_walk(static_cast<int>(c.integer("dim", 2)), c.flag("lazify", false),
                            c.number("beta", 1.0));
}

SamplingPlan plan_from(const ExperimentConfig& c) {
  SamplingPlan p;
  p.thin = static_cast<std::size_t>(c.integer("thin", 1));
  p.samples = static_cast<std::size_t>(c.integer("sweeps", 1000)) / p.thin;
  if (c.has("burnin")) p.burnin = static_cast<std::size_t>(c.integer("burnin", 0));
  p.chain.window_radius = static_cast<int>(c.integer("window_radius", 0));
  p.chains = static_cast<std::size_t>(c.integer("chains", 1));
  p.batches = static_cast<std::size_t>(c.integer("batches", 20));
  const std::string s = c.text("sampler", "auto");
  p.chain.kind = s == "collapsed"   ? SamplerKind::collapsed
                 : s == "augmented" ? SamplerKind::augmented
                                    : SamplerKind::automatic;
  return p;
}

std::string num(double v) { return format_number(v); }

std::vector<std::string> coord_header(const std::string& prefix, int dim) {
  std::vector<std::string> h;
  for (int i = 1; i <= dim; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

void append_coords(std::vector<std::string>& cells, const Point& p, int dim) {
  for (int i = 0; i < dim; ++i) cells.push_back(format_number(p[i]));
}
std::string num(std::size_t v) { return format_number(static_cast<std::uint64_t>(v)); }

std::string join_flags(const std::vector<std::string>& flags) {
  std::string s;
  for (const auto& f : flags) s += (s.empty() ? "" : ";") + f;
  return s;
}

std::vector<Artifact> scan_artifacts(const ScanResult& r) {
  std::vector<std::string> header = {"epsilon", "value", "stderr", "n_used", "flags"};
  std::vector<std::string> extra;
  for (const auto& row : r.rows) {
    for (const auto& [k, _] : row.extra) {
      if (std::find(extra.begin(), extra.end(), k) == extra.end()) extra.push_back(k);
    }
  }
  header.insert(header.end(), extra.begin(), extra.end());
  CsvTable t(header);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells = {num(row.epsilon), num(row.value.mean),
                                      num(row.value.std_error), num(row.n_used),
                                      join_flags(row.flags)};
    for (const auto& key : extra) {
      std::string cell;
      for (const auto& [k, v] : row.extra) {
        if (k == key) cell = num(v);
      }
      cells.push_back(cell);
    }
    t.row(std::move(cells));
  }
  CsvTable s({"key", "value"});
  s.row({"quantity", r.quantity});
  for (const auto& [k, v] : r.summary) s.row({k, v});
  return {{"scan.csv", t.str()}, {"fit_summary.csv", s.str()}};
}

std::vector<Artifact> kernel_info(const ExperimentConfig& c) {
  const StepKernel k = kernel_from(c);
  auto header = coord_header("x", k.dim());
  header.push_back("probability");
  CsvTable steps(header);
  for (const auto& s : k.steps()) {
    std::vector<std::string> cells;
    append_coords(cells, s.x, k.dim());
    cells.push_back(num(s.p));
    steps.row(std::move(cells));
  }
  CsvTable sum({"key", "value"});
  sum.row({"dim", num(static_cast<std::size_t>(k.dim()))});
  sum.row({"lazy", k.lazy() ? "true" : "false"});
  sum.row({"beta", num(k.beta())});
  sum.row({"beta_eff", num(k.beta_eff())});
  sum.row({"aperiodic", k.aperiodic() ? "true" : "false"});
  sum.row({"reach", num(static_cast<std::size_t>(k.reach()))});
  sum.row({"det_covariance", num(k.det_covariance())});
  for (int i = 0; i < k.dim(); ++i) {
    for (int j = 0; j < k.dim(); ++j) {
      sum.row({"covariance_" + std::to_string(i) + std::to_string(j), num(k.covariance()(i, j))});
    }
  }
  const long n = c.integer("n", 200);
  const double pn = pmf_along(k, n, Point{}).back();
  const double d = k.dim();
  const double clt = std::pow(2.0 * std::numbers::pi * static_cast<double>(n), d / 2.0) *
                     std::sqrt(k.det_covariance());
  sum.row({"n", num(static_cast<std::size_t>(n))});
  sum.row({"p_n_origin", num(pn)});
  sum.row({"local_clt_ratio", num(pn * clt)});
  return {{"kernel.csv", steps.str()}, {"summary.csv", sum.str()}};
}

std::vector<Artifact> green_probe(const ExperimentConfig& c) {
  const StepKernel k = kernel_from(c);
  const Point x = c.point("x", Point{});
  const Point y = c.point("y", Point{});
  SolverOptions so;
  so.tolerance = c.number("tolerance", 1e-10);
  std::vector<std::string> header = {"radius", "sites"};
  for (const auto& h : coord_header("x", k.dim())) header.push_back(h);
  for (const auto& h : coord_header("y", k.dim())) header.push_back(h);
  for (const char* h : {"visits", "G", "residual"}) header.push_back(h);
  CsvTable t(header);
  for (long r : c.integers("radii")) {
    const Region reg = Region::centered_box(k, static_cast<int>(r));
    const GreenProbe g = green_killed(reg, x, y, so);
    std::vector<std::string> cells = {num(static_cast<std::size_t>(r)), num(reg.alive_count())};
    append_coords(cells, x, k.dim());
    append_coords(cells, y, k.dim());
    cells.push_back(num(g.visits));
    cells.push_back(num(g.value));
    cells.push_back(num(g.residual));
    t.row(std::move(cells));
  }
  return {{"green.csv", t.str()}};
}

std::vector<Artifact> pins_sample(const ExperimentConfig& c, int jobs) {
  const StepKernel k = kernel_from(c);
  const int d = k.dim();
  const Region lambda = Region::centered_box(k, static_cast<int>(c.integer("box_radius", 1)));
  const double eps = c.number("epsilon", 0.5);
  const SamplingPlan plan = plan_from(c);
  const std::uint64_t seed = c.seed();
  const std::size_t n = lambda.alive_count();
  const std::size_t per_chain = plan.samples / plan.chains;
  std::vector<std::string> final_bits(plan.chains);
  const auto series = run_chains(lambda, eps, plan, seed, jobs, n + 1,
                                 [&](const PinChain& ch, std::size_t ci, std::size_t t) {
                                   std::vector<double> v(n + 1);
                                   double count = 0.0;
                                   for (std::size_t i = 0; i < n; ++i) {
                                     v[i] = ch.pinned()[i];
                                     count += v[i];
                                   }
                                   v[n] = count;
                                   if (t + 1 == per_chain) {
                                     std::string bits(n, '0');
                                     for (std::size_t i = 0; i < n; ++i) {
                                       if (ch.pinned()[i]) bits[i] = '1';
                                     }
                                     final_bits[ci] = std::move(bits);
                                   }
                                   return v;
                                 });
  std::optional<ExactPinTable> exact;
  if (n <= 16) exact = exact_pin_measure(lambda, eps);
  auto header = coord_header("x", d);
  for (const char* h : {"frequency", "stderr", "exact"}) header.push_back(h);
  CsvTable t(header);
  for (std::size_t i = 0; i < n; ++i) {
    const Estimate e = estimate_batch_means(series[i], plan.batches, seed);
    std::string ex;
    if (exact) {
      const auto& w = exact->window;
      const auto bit = static_cast<std::size_t>(std::find(w.begin(), w.end(), lambda.site(i)) -
                                                w.begin());
      ex = num(exact->marginal(bit));
    }
    std::vector<std::string> cells;
    append_coords(cells, lambda.site(i), d);
    cells.push_back(num(e.mean));
    cells.push_back(num(e.std_error));
    cells.push_back(ex);
    t.row(std::move(cells));
  }
  // Final state of every chain as a bit row over the sites in pins.csv order.
  CsvTable states({"chain", "sweeps", "bits"});
  for (std::size_t ci = 0; ci < plan.chains; ++ci) {
    states.row({num(ci), num(per_chain * plan.thin + plan.burnin.value_or(per_chain * plan.thin)),
                final_bits[ci]});
  }
  const Estimate cnt = estimate_batch_means(series[n], plan.batches, seed);
  CsvTable s({"key", "value"});
  s.row({"sites", num(n)});
  s.row({"epsilon", num(eps)});
  s.row({"mean_pin_count", num(cnt.mean)});
  s.row({"mean_pin_count_stderr", num(cnt.std_error)});
  std::vector<Artifact> out = {{"pins.csv", t.str()}, {"states.csv", states.str()}};
  if (exact) {
    // Bit i of the mask is site i of pins.csv.
    std::vector<std::size_t> slot_bit(n);
    for (std::size_t i = 0; i < n; ++i) {
      slot_bit[i] = static_cast<std::size_t>(
          std::find(exact->window.begin(), exact->window.end(), lambda.site(i)) -
          exact->window.begin());
    }
    CsvTable ex({"subset_mask", "probability"});
    for (std::uint64_t mask = 0; mask < exact->size(); ++mask) {
      std::uint64_t win = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) win |= std::uint64_t{1} << slot_bit[i];
      }
      ex.row({num(mask), num(exact->probability[win])});
    }
    out.push_back({"exact_table.csv", ex.str()});
  }
  out.push_back({"summary.csv", s.str()});
  return out;
}

std::vector<Artifact> fkg_check(const ExperimentConfig& c) {
  const StepKernel k = kernel_from(c);
  CsvTable t({"side", "sites", "epsilon", "pairs", "min_ratio", "arg_a", "arg_b"});
  for (long side : c.integers("sides")) {
    const Region lambda(k, Box::corner(k.dim(), static_cast<int>(side)));
    for (double eps : c.numbers("eps_list")) {
      const LatticeCheck r = check_lattice_condition(lambda, eps);
      t.row({num(static_cast<std::size_t>(side)), num(lambda.alive_count()), num(eps), num(r.pairs),
             num(r.min_ratio), num(static_cast<std::uint64_t>(r.arg_a)),
             num(static_cast<std::uint64_t>(r.arg_b))});
    }
  }
  return {{"fkg.csv", t.str()}};
}

std::vector<Artifact> domination_check(const ExperimentConfig& c) {
  const StepKernel k = kernel_from(c);
  const int radius = static_cast<int>(c.integer("box_radius", 4));
  const int distance = static_cast<int>(c.integer("distance", 3));
  const int w = static_cast<int>(c.integer("pin_window", 1));
  const Region lambda = Region::centered_box(k, radius);
  std::vector<Point> window;
  for (const auto& p : segment_window(k.dim(), distance, w)) {
    if (lambda.alive(p)) window.push_back(p);
  }
  if (window.size() > 20) throw ResourceError("pin window holds more than 20 sites");
  const Point y = axis_point(0, distance);
  if (!lambda.alive(y)) throw std::invalid_argument("distance: target lies outside the box");
  const PinEnumerator e(lambda, window);
  CsvTable t({"epsilon", "window_sites", "p_dense", "p_sparse", "cov_bernoulli_dense",
              "cov_exact", "cov_bernoulli_sparse", "sandwiched"});
  for (double eps : c.numbers("eps_list")) {
    const DominationFit f = fit_domination(e.table(eps));
    const double lo = bernoulli_window_covariance(e, f.p_dense, Point{}, y);
    const double ex = exact_pinned_covariance(e, eps, Point{}, y);
    const double hi = bernoulli_window_covariance(e, f.p_sparse, Point{}, y);
    t.row({num(eps), num(window.size()), num(f.p_dense), num(f.p_sparse), num(lo), num(ex), num(hi),
           lo <= ex && ex <= hi ? "true" : "false"});
  }
  return {{"domination.csv", t.str()}};
}

std::vector<Artifact> variance_scan_cmd(const ExperimentConfig& c, int jobs) {
  const StepKernel k = kernel_from(c);
  VarianceScanOptions o;
  o.policy.c = c.number("box_c", o.policy.c);
  o.policy.min_radius = static_cast<int>(c.integer("min_radius", o.policy.min_radius));
  if (c.has("box_radius")) o.radius = static_cast<int>(c.integer("box_radius", 0));
  o.plan = plan_from(c);
  if (!c.has("sampler")) o.plan.chain.kind = SamplerKind::augmented;
  o.eta = c.number("eta", 3.0);
  o.cross_check = c.flag("cross_check", true);
  const auto eps = c.numbers("eps_list");
  return scan_artifacts(variance_scan(k, eps, o, c.seed(), jobs));
}

std::vector<Artifact> mass_scan_cmd(const ExperimentConfig& c, int jobs) {
  const StepKernel k = kernel_from(c);
  MassScanOptions o;
  o.mode = c.text("mode", "bernoulli-surrogate") == "pinning-exact" ? MassMode::pinning_exact
                                                                     : MassMode::bernoulli_surrogate;
  o.curve = c.text("curve", "slab") == "axis" ? CurveKind::axis : CurveKind::slab;
  o.budget = static_cast<std::size_t>(c.integer("budget", static_cast<long>(o.budget)));
  o.nmax_policy = c.text("nmax_policy", "diffusive") == "linear" ? NmaxPolicy::linear
                                                                  : NmaxPolicy::diffusive;
  o.nmax_factor = c.number("nmax_factor", o.nmax_factor);
  if (c.has("fit_window")) {
    std::string s = c.text("fit_window", "");
    std::replace(s.begin(), s.end(), ':', ',');
    ExperimentConfig tmp;
    tmp.values["w"] = s;
    const auto v = tmp.numbers("w");
    o.fit_lo = v.at(0);
    o.fit_hi = v.at(1);
  }
  o.mapping = c.text("mapping", "standard") == "linear" ? TrapMapping::linear : TrapMapping::standard;
  o.mapping_constant = c.number("mapping_constant", 1.0);
  o.weight_floor = c.number("weight_floor", o.weight_floor);
  o.pin_plan = plan_from(c);
  const auto eps = c.numbers("eps_list");
  return scan_artifacts(mass_scan(k, eps, o, c.seed(), jobs));
}

std::vector<Artifact> range_stats(const ExperimentConfig& c, int jobs) {
  const StepKernel k = kernel_from(c);
  const long n = c.integer("n", 10000);
  const auto reps = static_cast<std::size_t>(c.integer("reps", 10000));
  const double kappa = c.number("kappa", 0.1);
  const TailEstimate tail = range_tail(k, n, kappa, reps, c.seed(), jobs);
  const RangeSamples rs = simulate_range(k, n, reps, c.seed(), jobs);
  CsvTable t({"n", "reps", "mean_range", "stderr", "kappa", "threshold", "hits", "frequency",
              "upper_bound_95"});
  t.row({num(static_cast<std::size_t>(n)), num(reps), num(rs.mean.mean), num(rs.mean.std_error),
         num(kappa), num(tail.threshold), num(tail.hits), num(tail.frequency),
         num(tail.upper_bound_95)});
  return {{"range.csv", t.str()}};
}

std::vector<Artifact> renewal_cmd(const ExperimentConfig& c) {
  const double tol = c.number("tol", 1e-12);
  CsvTable t({"epsilon", "lambda", "lambda_over_eps2_half", "M", "M_times_eps3", "variance",
              "variance_times_2eps2"});
  CsvTable d({"epsilon", "residual", "k_max", "tail_bound"});
  for (double e : c.numbers("eps_list")) {
    const RenewalModel m = solve_renewal(e, tol);
    const double M = renewal_mean(m), v = variance_1d(m);
    t.row({num(e), num(m.lambda), num(m.lambda / (e * e / 2.0)), num(M), num(M * e * e * e), num(v),
           num(v * 2.0 * e * e)});
    d.row({num(e), num(m.residual), num(static_cast<std::size_t>(m.k_max)), num(m.tail_bound)});
  }
  return {{"renewal.csv", t.str()}, {"renewal_diagnostics.csv", d.str()}};
}

std::vector<Artifact> box_stability_cmd(const ExperimentConfig& c, int jobs) {
  const StepKernel k = kernel_from(c);
  std::vector<int> radii;
  for (long r : c.integers("radii")) radii.push_back(static_cast<int>(r));
  const auto probe = c.text("probe", "origin-unpinned") == "variance-origin"
                         ? StabilityProbe::variance_origin
                         : StabilityProbe::origin_unpinned;
  const auto rows = box_stability(k, c.number("epsilon", 0.5), radii, probe, plan_from(c),
                                  c.seed(), jobs);
  CsvTable t({"radius", "sites", "value", "stderr", "exact"});
  for (const auto& r : rows) {
    t.row({num(static_cast<std::size_t>(r.radius)), num(r.sites), num(r.value.mean),
           num(r.value.std_error), r.exact ? num(*r.exact) : ""});
  }
  return {{"stability.csv", t.str()}};
}

void write_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw ResourceError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string manifest_text(const ExperimentConfig& cfg, const RunOptions& opts,
                          const std::string& status, const std::vector<Artifact>& files,
                          double seconds, const std::string& error) {
  std::ostringstream m;
  m << "pinfield " << kVersion << "\n";
  m << "command: " << cfg.command << "\n";
  m << "status: " << status << "\n";
  m << "jobs: " << opts.jobs << "\n";
  for (const auto& [k, v] : cfg.values) m << "config." << k << ": " << v << "\n";
  m << "seeds: replica or chain r draws from mt19937_64(splitmix64(seed, r)); scan point i uses "
       "splitmix64(seed, i) as its master seed\n";
  if (status != "running") m << "wall_seconds: " << std::fixed << std::setprecision(3) << seconds << "\n";
  if (!error.empty()) m << "error: " << error << "\n";
  for (const auto& f : files) m << "file: " << f.name << " sha256 " << sha256_hex(f.content) << "\n";
  return m.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
  std::ostringstream os;
  for (unsigned char b : md) os << std::hex << std::setw(2) << std::setfill('0') << int(b);
  return os.str();
}

std::vector<Artifact> execute(const ExperimentConfig& c, int jobs, std::ostream& log) {
  const std::string& cmd = c.command;
  log << "running " << cmd << "\n";
  if (cmd == "kernel-info") return kernel_info(c);
  if (cmd == "green-probe") return green_probe(c);
  if (cmd == "pins-sample") return pins_sample(c, jobs);
  if (cmd == "fkg-check") return fkg_check(c);
  if (cmd == "domination-check") return domination_check(c);
  if (cmd == "variance-scan") return variance_scan_cmd(c, jobs);
  if (cmd == "mass-scan") return mass_scan_cmd(c, jobs);
  if (cmd == "range-stats") return range_stats(c, jobs);
  if (cmd == "renewal1d") return renewal_cmd(c);
  if (cmd == "box-stability") return box_stability_cmd(c, jobs);
  throw std::invalid_argument("unknown command " + cmd);
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (!opts.output_dir.empty()) return opts.output_dir;
  if (const char* env = std::getenv("PINFIELD_OUTPUT_DIR"); env && *env) return env;
  return cfg.text("output_dir", "out");
}

int run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  const auto violations = validate(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) err << "config: " << v << "\n";
    return 2;
  }
  if (opts.jobs < 1) {
    err << "jobs: must be >= 1\n";
    return 2;
  }
  const fs::path dir = resolve_output_dir(cfg, opts);
  try {
    fs::create_directories(dir);
    write_atomic(dir / "manifest.txt", manifest_text(cfg, opts, "running", {}, 0.0, ""));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  int code = 0;
  std::string message;
  std::vector<Artifact> files;
  try {
    files = execute(cfg, opts.jobs, out);
    for (const auto& f : files) write_atomic(dir / f.name, f.content);
  } catch (const std::invalid_argument& e) {
    code = 2;
    message = e.what();
  } catch (const NumericalError& e) {
    code = 3;
    message = e.what();
  } catch (const ResourceError& e) {
    code = 4;
    message = e.what();
  } catch (const std::bad_alloc&) {
    code = 4;
    message = "out of memory";
  } catch (const std::exception& e) {
    code = 3;
    message = e.what();
  }
  if (code != 0) {
    files.clear();
    err << "error: " << message << "\n";
  }
  try {
    write_atomic(dir / "manifest.txt",
                 manifest_text(cfg, opts, code == 0 ? "ok" : "failed", files, seconds(), message));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return code == 0 ? 4 : code;
  }
  for (const auto& f : files) out << "wrote " << (dir / f.name).string() << "\n";
  return code;
}

}  // namespace pinfield::cli
