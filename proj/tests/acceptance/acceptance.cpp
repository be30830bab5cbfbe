#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "incpen/diagnostics.hpp"
#include "incpen/experiments.hpp"
#include "incpen/huber.hpp"
#include "incpen/kernels.hpp"
#include "incpen/projection.hpp"
#include "incpen/rng.hpp"
#include "incpen/schedules.hpp"
#include "incpen/solver.hpp"

namespace fs = std::filesystem;
using namespace incpen;

namespace {

const fs::path kConfigDir = fs::path(INCPEN_SOURCE_DIR) / "configs";
const fs::path kWorkDir = fs::path(INCPEN_BINARY_DIR) / "acceptance_work";

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> details;

  void fail(std::string why) {
    pass = false;
    details.push_back("FAIL: " + std::move(why));
  }
  void note(std::string line) { details.push_back(std::move(line)); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector random_vector(CounterRng& rng, std::size_t n, double scale) {
  Vector v(n);
  for (auto& e : v) e = scale * rng.normal();
  return v;
}

double norm(const Vector& v) { return kernels::norm(v); }

double diff_norm(const Vector& a, const Vector& b) { return std::sqrt(kernels::sqdist(a, b)); }

// ---------------------------------------------------------------------------

Outcome ac1_penalty_math() {
  const auto t0 = std::chrono::steady_clock::now();
  CounterRng rng(CounterRng::derive(1, 1));
  constexpr int kSamples = 10000;
  std::size_t continuity = 0, unit = 0, fd = 0, fd_checked = 0, lip = 0, mono = 0, gap = 0;
  double worst_fd = 0.0;

  for (int it = 0; it < kSamples; ++it) {
    const std::size_t n = 1 + rng.uniform_index(10);
    const double delta = std::exp(std::log(1e-3) + rng.uniform01() * std::log(2.0 / 1e-3));
    const HalfspaceConstraint c(random_vector(rng, n, 1.0 + 2.0 * rng.uniform01()), rng.normal());
    const double na = c.norm_a();
    // Place x so that the residual lands near the band about half the time.
    Vector x = random_vector(rng, n, 1.0);
    const double target = (rng.uniform01() < 0.5 ? 1.5 : 6.0) * delta * (2.0 * rng.uniform01() - 1.0);
    const double shift = (target - c.residual(x)) / (na * na);
    for (std::size_t j = 0; j < n; ++j) x[j] += shift * c.a()[j];
    const double s = c.residual(x);

    // Branch continuity of p and p' at s = +-delta.
    const double eps = 1e-9 * delta;
    const bool cont = std::abs(p_delta(delta, delta) - delta) <= 1e-12 * (1.0 + delta) &&
                      std::abs(p_delta(-delta, delta)) <= 1e-15 &&
                      std::abs(p_delta(delta + eps, delta) - p_delta(delta - eps, delta)) <= 4.0 * eps &&
                      std::abs(p_delta(-delta + eps, delta) - p_delta(-delta - eps, delta)) <= 4.0 * eps &&
                      std::abs(p_delta_prime(delta, delta) - 1.0) <= 1e-12 &&
                      std::abs(p_delta_prime(-delta, delta)) <= 1e-12 &&
                      std::abs(p_delta_prime(delta + eps, delta) - p_delta_prime(delta - eps, delta)) <= 1e-6 &&
                      std::abs(p_delta_prime(-delta + eps, delta) - p_delta_prime(-delta - eps, delta)) <= 1e-6;
    if (!cont) ++continuity;

    const Vector g = grad_h_delta(x, c, delta);
    if (norm(g) > 1.0 + 1e-12) ++unit;

    // Central differences, away from the kinks at s = +-delta.
    const double eta = 1e-6 * delta;
    if (std::abs(s - delta) > 20.0 * eta * na && std::abs(s + delta) > 20.0 * eta * na) {
      ++fd_checked;
      Vector gfd(n), xp = x, xm = x;
      for (std::size_t j = 0; j < n; ++j) {
        xp[j] = x[j] + eta;
        xm[j] = x[j] - eta;
        gfd[j] = (h_delta(xp, c, delta) - h_delta(xm, c, delta)) / (2.0 * eta);
        xp[j] = xm[j] = x[j];
      }
      const double err = diff_norm(gfd, g) / std::max(norm(g), 1e-3);
      worst_fd = std::max(worst_fd, err);
      if (err > 1e-5) ++fd;
    }

    // Lipschitz bound ||a|| / (2 delta), with a nearby and a far partner.
    const double radius = rng.uniform01() < 0.5 ? delta / na : 3.0;
    const Vector y = [&] {
      Vector v = random_vector(rng, n, radius);
      for (std::size_t j = 0; j < n; ++j) v[j] += x[j];
      return v;
    }();
    const double lhs = diff_norm(grad_h_delta(x, c, delta), grad_h_delta(y, c, delta));
    if (lhs > na / (2.0 * delta) * diff_norm(x, y) * (1.0 + 1e-10) + 1e-14) ++lip;

    // Monotone in delta and the gradient gap bound.
    const double d2 = delta * rng.uniform01();
    if (h_delta(x, c, delta) + 1e-13 * (1.0 + std::abs(s)) < h_delta(x, c, d2)) ++mono;
    if (d2 > 0.0 && grad_penalty_gap(x, c, delta, d2) > (delta - d2) / (2.0 * delta) + 1e-12) ++gap;
  }
  const double elapsed = seconds_since(t0);

  Outcome o;
  const std::size_t total = continuity + unit + fd + lip + mono + gap;
  o.summary = "penalty math: " + std::to_string(kSamples) + " samples, " + std::to_string(total) + " violations, " +
              fmt("%.2f", elapsed) + " s";
  o.note("continuity " + std::to_string(continuity) + ", ||grad h|| <= 1 " + std::to_string(unit) +
         ", finite differences " + std::to_string(fd) + " of " + std::to_string(fd_checked) + " (worst rel err " +
         fmt("%.2e", worst_fd) + "), Lipschitz " + std::to_string(lip) + ", monotone in delta " +
         std::to_string(mono) + ", gradient gap " + std::to_string(gap));
  if (total > 0) o.fail(std::to_string(total) + " violations");
  if (elapsed >= 5.0) o.fail("runtime " + fmt("%.2f", elapsed) + " s >= 5 s");
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac2_per_path_inequality() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  std::size_t checks = 0, violations = 0;

  struct Case {
    fs::path instance_spec;
    fs::path schedule_spec;
  };
  const Case cases[] = {
      {kConfigDir / "instance_quadratic_outside.ini", kConfigDir / "schedule_simulation_sc.ini"},
      {kConfigDir / "instance_l1_outside.ini", kConfigDir / "schedule_polylog.ini"},
  };
  for (const Case& c : cases) {
    const ProblemInstance inst = generate(load_generator_spec(c.instance_spec));
    const ScheduleTriple sch = load_schedule_spec(c.schedule_spec).build(inst.objective().mu(), inst.system().size());
    RunOptions opts;
    opts.iters = 10000;
    opts.seed = CounterRng::derive(2, 1);
    opts.assert_level = AssertLevel::full;
    opts.track_distances = false;
    const RunTrace tr = run(inst, sch, opts);
    const std::size_t anchors = tr.inequality_checks / opts.iters;
    o.note(inst.id() + ": " + std::to_string(tr.inequality_checks) + " checks (" + std::to_string(anchors) +
           " anchors), " + std::to_string(tr.inequality_violations) + " violations" +
           (tr.first_violation.empty() ? "" : ", first at " + tr.first_violation));
    if (anchors != 2) o.fail(inst.id() + ": known optimum not usable as a feasible anchor");
    checks += tr.inequality_checks;
    violations += tr.inequality_violations;
  }
  const double elapsed = seconds_since(t0);
  o.summary = "per-path inequality: " + std::to_string(checks) + " checks, " + std::to_string(violations) +
              " violations, " + fmt("%.2f", elapsed) + " s";
  if (violations > 0) o.fail(std::to_string(violations) + " violations");
  if (elapsed >= 30.0) o.fail("runtime " + fmt("%.2f", elapsed) + " s >= 30 s");
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac3_unbiasedness() {
  const ProblemInstance inst = generate(load_generator_spec(kConfigDir / "instance_quadratic_outside.ini"));
  const ConstraintSystem& sys = inst.system();
  const std::size_t n = sys.dim(), m = sys.size();
  constexpr std::size_t kPoints = 20, kDraws = 10000;
  const double gamma = 1.0, delta = 0.5;

  CounterRng point_rng(CounterRng::derive(3, 1));
  std::size_t coords = 0, outside = 0, degenerate = 0;
  double worst_z = 0.0;
  for (std::size_t p = 0; p < kPoints; ++p) {
    Vector x = random_vector(point_rng, n, 1.0);
    for (std::size_t j = 0; j < n; ++j) x[j] += inst.witness()[j];
    const Vector full = full_penalty_term(sys, x, gamma, delta);

    CounterRng rng(CounterRng::derive(3, 100 + p));
    Vector mean(n, 0.0), sq(n, 0.0);
    for (std::size_t d = 0; d < kDraws; ++d) {
      const Vector g = incremental_penalty_term(sys, x, rng.uniform_index(m), gamma, delta);
      for (std::size_t j = 0; j < n; ++j) {
        mean[j] += g[j];
        sq[j] += g[j] * g[j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      ++coords;
      const double mu = mean[j] / kDraws;
      const double var = std::max(0.0, sq[j] / kDraws - mu * mu) * kDraws / (kDraws - 1.0);
      const double se = std::sqrt(var / kDraws);
      const double dev = std::abs(mu - full[j]);
      if (se == 0.0) {
        ++degenerate;
        if (dev > 1e-12 * (1.0 + std::abs(full[j]))) ++outside;
        continue;
      }
      worst_z = std::max(worst_z, dev / se);
      if (dev > 3.0 * se) ++outside;
    }
  }
  Outcome o;
  o.summary = "unbiasedness: " + std::to_string(kPoints) + " points x " + std::to_string(kDraws) + " draws, " +
              std::to_string(outside) + " of " + std::to_string(coords) + " coordinates beyond 3 SE";
  const double expected = static_cast<double>(coords - degenerate) * std::erfc(3.0 / std::sqrt(2.0));
  o.note("largest |mean - full| / SE = " + fmt("%.3f", worst_z) + "; zero-variance coordinates " +
         std::to_string(degenerate) + "; an exactly unbiased sampler exceeds 3 SE on " + fmt("%.2f", expected) +
         " coordinates on average");
  if (outside > 0) o.fail(std::to_string(outside) + " coordinates beyond 3 standard errors");
  return o;
}

// ---------------------------------------------------------------------------

double final_value(const RunTrace& tr, const std::string& quantity) {
  const auto v = quantity_value(tr.records.back(), quantity, tr.f_star);
  return v ? *v : NAN;
}

Outcome ac4_desk_scale() {
  Outcome o;
  SuiteConfig cfg = load_suite_config(kConfigDir / "section5_quadratic.ini");
  cfg.threads = 1;
  o.note("c_gamma = " + fmt("%g", cfg.schedule_for(ObjectiveKind::quadratic_shift).c_gamma) + " (" +
         (kConfigDir / "section5_quadratic.ini").filename().string() + "), " + std::to_string(cfg.run.iters) +
         " iterations");
  std::size_t passed = 0, total = 0;
  for (std::size_t si = 0; si < cfg.specs.size(); ++si) {
    SuiteConfig one = cfg;
    one.specs = {cfg.specs[si]};
    const auto t0 = std::chrono::steady_clock::now();
    const SuiteReport rep = run_suite(one);
    const double elapsed = seconds_since(t0);
    for (const RunResult& r : rep.runs) {
      ++total;
      if (!r.ok) {
        o.fail(r.instance_id + ": run failed: " + r.error);
        continue;
      }
      const double rel = final_value(r.trace, "rel_err_x");
      const double dist = final_value(r.trace, "dist_avg_sinv");
      const bool ok = rel <= 1e-2 && dist <= 1e-2 && elapsed < 120.0;
      o.note(r.instance_id + ": rel err " + fmt("%.3e", rel) + ", dist(avg) " + fmt("%.3e", dist) + ", " +
             fmt("%.2f", elapsed) + " s " + (ok ? "ok" : "FAIL"));
      if (ok)
        ++passed;
      else
        o.pass = false;
    }
  }
  o.summary = "desk-scale convergence: " + std::to_string(passed) + " of " + std::to_string(total) +
              " configurations within 1e-2";
  return o;
}

// ---------------------------------------------------------------------------

RateFit suite_rate(const fs::path& config, const std::string& quantity, Outcome& o) {
  SuiteConfig cfg = load_suite_config(config);
  cfg.threads = 1;
  const SuiteReport rep = run_suite(cfg);
  if (rep.failures() > 0) o.fail(config.filename().string() + ": " + std::to_string(rep.failures()) + " runs failed");
  std::vector<std::size_t> t;
  const std::vector<double> v = rep.curves.at(0).series(quantity, t);
  const RateFit fit = fit_rate(t, v, 1000, 100000, quantity);
  std::string per_seed;
  for (const RunResult& r : rep.runs) {
    try {
      per_seed += fmt(" %.3f", fit_rate(r.trace.records, quantity, 1000, 100000, r.trace.f_star).slope);
    } catch (const std::exception&) {
      per_seed += " n/a";
    }
  }
  o.note(config.filename().string() + ": " + quantity + " of the " + std::to_string(rep.curves.at(0).runs) +
         "-seed mean, slope " + fmt("%.3f", fit.slope) + " (r2 " + fmt("%.3f", fit.r_squared) +
         "); per-seed slopes" + per_seed);
  return fit;
}

Outcome ac5_rate_fits() {
  Outcome o;
  const RateFit sc = suite_rate(kConfigDir / "rate_strongly_convex.ini", "fgap_avg_sinv", o);
  const RateFit cvx = suite_rate(kConfigDir / "rate_l1_polylog.ini", "fgap_avg_s", o);
  const bool sc_ok = sc.slope > -1.25 && sc.slope < -0.75;
  const bool cvx_ok = cvx.slope <= -0.35;
  if (!sc_ok) o.fail("strongly convex slope outside (-1.25, -0.75)");
  if (!cvx_ok) o.fail("l1 slope above -0.35");
  o.summary = "rate fits: strongly convex " + fmt("%.3f", sc.slope) + " in (-1.25, -0.75), l1 " +
              fmt("%.3f", cvx.slope) + " <= -0.35";
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac6_diagnostics() {
  Outcome o;
  const ProblemInstance inst = generate(load_generator_spec(kConfigDir / "instance_quadratic_outside.ini"));
  const std::vector<double> gammas{1e2, 1e3, 1e4};
  const std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  const double tol = 1e-9;
  const InfeasibilityScan scan = infeasibility_scan(inst, gammas, deltas, tol, 0);
  for (const DeltaRatio& dr : scan.ratios)
    o.note("gamma " + fmt("%g", dr.gamma) + ", delta " + fmt("%g", dr.delta_hi) + " -> " + fmt("%g", dr.delta_lo) +
           ": ratio " + (dr.ratio ? fmt("%.3f", *dr.ratio) : std::string("n/a")));
  if (scan.ratios_evaluated == 0) o.fail("no delta-halving ratio could be evaluated");
  if (!scan.ratios_ok) o.fail("a dist ratio is outside [2/3, 6]");
  if (!scan.monotone_ok) o.fail("dist does not decrease along gamma up, delta down");

  std::size_t level_bad = 0;
  for (const auto& r : scan.reports)
    if (!r.solved || !r.level_ok) ++level_bad;
  if (level_bad > 0) o.fail(std::to_string(level_bad) + " reports violate level-set containment");

  const GapCheck gap = strong_convexity_gap_check(inst, gammas, deltas, tol, 0);
  o.note("gap bound: " + std::to_string(gap.evaluated) + " of " + std::to_string(gap.entries.size()) +
         " pairs in regime");
  if (gap.evaluated == 0) o.fail("no pair in the sufficient-gamma regime");
  if (!gap.all_passed) o.fail("gap bound violated on an in-regime pair");

  o.summary = "diagnostics: " + std::to_string(scan.ratios_evaluated) + " delta ratios, " +
              std::to_string(gap.evaluated) + " gap pairs, " + std::to_string(scan.reports.size() - level_bad) + " of " +
              std::to_string(scan.reports.size()) + " level-set checks";
  return o;
}

// ---------------------------------------------------------------------------

Outcome ac7_schedule_validation() {
  Outcome o;
  std::size_t grid = 0, wrong = 0;
  auto expect = [&](double c, double g, double d) {
    const bool in_region = c >= 0.5 && c < 1.0 && d > 0.5;
    const bool accepted = validate_assumption(ScheduleTriple::polylog_convex(c, g, d)).passed();
    ++grid;
    if (accepted != in_region) {
      ++wrong;
      o.fail("c = " + fmt("%g", c) + ", g = " + fmt("%g", g) + ", d = " + fmt("%g", d) + ": " +
             (accepted ? "accepted" : "rejected"));
    }
  };
  // 20 points straddling each boundary c = 1/2, c = 1 and d = 1/2.
  for (int i = 0; i < 20; ++i) {
    const double off = (i - 9.5) / 9.5 * 0.05;
    expect(0.5 + off, 0.1, 1.0);
    expect(1.0 + off, 0.1, 1.0);
    expect(0.75, 0.1, 0.5 + off);
  }
  for (double c : {0.5, 1.0}) expect(c, 0.1, 1.0);
  expect(0.75, 0.1, 0.5);

  std::size_t sums_wrong = 0;
  for (double mu : {0.5, 2.0, 3.0})
    for (std::size_t t : {1, 7, 100, 1000, 4096}) {
      const PartialSums ps = partial_sums(ScheduleTriple::strongly_convex(mu, 0.1, 1.5), t);
      const double expected = mu / 2.0 * static_cast<double>(t) * static_cast<double>(t + 1) / 2.0;
      if (std::abs(ps.Sbar - expected) > 1e-12 * expected) ++sums_wrong;
    }
  if (sums_wrong > 0) o.fail(std::to_string(sums_wrong) + " partial sums differ from (mu/2) t (t+1) / 2");
  o.summary = "schedule validation: " + std::to_string(grid - wrong) + " of " + std::to_string(grid) +
              " grid points classified correctly, " + std::to_string(sums_wrong) + " partial-sum mismatches";
  return o;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome ac8_determinism() {
  Outcome o;
  const fs::path dirs[] = {kWorkDir / "grid_a", kWorkDir / "grid_b"};
  const std::size_t threads[] = {1, 0};
  for (int i = 0; i < 2; ++i) {
    fs::remove_all(dirs[i]);
    SuiteConfig cfg = load_suite_config(kConfigDir / "section5_quadratic.ini");
    cfg.threads = threads[i];
    emit_report(run_suite(cfg), dirs[i]);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    ++files;
    const fs::path other = dirs[1] / fs::relative(e.path(), dirs[0]);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
      ++differing;
      o.fail(fs::relative(e.path(), dirs[0]).string() + " differs");
    }
  }
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[1]))
    if (e.is_regular_file() && e.path().extension() == ".csv") ++files_b;
  if (files_b != files) o.fail("different CSV file sets");
  if (files == 0) o.fail("no CSV output");
  o.summary = "determinism: " + std::to_string(files) + " CSV files compared, " + std::to_string(differing) +
              " differ";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"AC1", ac1_penalty_math},         {"AC2", ac2_per_path_inequality}, {"AC3", ac3_unbiasedness},
      {"AC4", ac4_desk_scale},           {"AC5", ac5_rate_fits},           {"AC6", ac6_diagnostics},
      {"AC7", ac7_schedule_validation},  {"AC8", ac8_determinism},
  };
  fs::create_directories(kWorkDir);
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    std::printf("%s %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", o.summary.c_str());
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
