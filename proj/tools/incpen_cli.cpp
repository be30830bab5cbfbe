// incpen: command-line front end.
//
// Exit codes: 0 success, 1 run failure, 2 usage or config error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incpen/csv.hpp"
#include "incpen/diagnostics.hpp"
#include "incpen/error.hpp"
#include "incpen/experiments.hpp"
#include "incpen/instance.hpp"
#include "incpen/kernels.hpp"
#include "incpen/schedules.hpp"
#include "incpen/solver.hpp"

namespace {

using namespace incpen;

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

// Thrown for problems with user input; mapped to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

ProblemInstance load_instance_arg(const std::string& path) {
  try {
    return load_instance(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  try {
    return parse_vector(text);
  } catch (const Error& e) {
    throw UsageError(std::string(what) + ": " + e.what());
  }
}

int cmd_generate(const std::string& spec_path, const std::string& out_path) {
  const GeneratorSpec spec = load_generator_spec(spec_path);
  const ProblemInstance inst = generate(spec);
  auto out = open_out(out_path);
  write_instance(out, inst);
  std::cout << "wrote " << inst.id() << " (n=" << inst.dim() << ", m=" << inst.system().size() << ") to "
            << out_path << '\n';
  return kOk;
}

struct SolveArgs {
  std::string instance, schedule, out;
  std::size_t iters = 0;
  std::uint64_t seed = 0;
  std::size_t trace_every = 0;
  std::string assert_level = "off";
  std::string init = "zero";
  std::string method = "incremental";
  bool allow_invalid = false;
};

int cmd_solve(const SolveArgs& a) {
  const ProblemInstance inst = load_instance_arg(a.instance);
  const ScheduleSpec spec = load_schedule_spec(a.schedule);
  RunOptions opts;
  opts.iters = a.iters;
  opts.seed = a.seed;
  opts.trace_every = a.trace_every;
  opts.allow_invalid_schedule = a.allow_invalid;
  try {
    opts.assert_level = parse_assert_level(a.assert_level);
    opts.init = parse_init_kind(a.init);
    if (opts.init == InitKind::explicit_point) throw InvalidArgument("--init must be zero or witness");
    if (a.method == "incremental") opts.method = Method::incremental;
    else if (a.method == "full_gradient") opts.method = Method::full_gradient;
    else throw InvalidArgument("--method must be incremental or full_gradient");
    if (opts.iters < 1) throw InvalidArgument("--iters must be >= 1");
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  ScheduleTriple sch = spec.build(inst.objective().mu(), inst.system().size());
  const AssumptionReport verdict = validate_assumption(sch);
  if (verdict.checkable && !verdict.passed() && !opts.allow_invalid_schedule)
    throw UsageError("schedule fails the convergence conditions (pass --allow-invalid-schedule to run anyway)\n" +
                     verdict.summary());

  try {
    const RunTrace trace = run(inst, sch, opts);
    auto out = open_out(a.out);
    write_trace_csv(out, trace);
    const auto& last = trace.records.back();
    std::cout << std::setprecision(6) << "k=" << last.k << " f(x)=" << last.f_x << " f(avg_s)=" << last.f_avg_s
              << " max_violation=" << last.max_violation;
    if (last.rel_err_x) std::cout << " rel_err_x=" << *last.rel_err_x;
    std::cout << '\n';
    if (trace.inequality_checks > 0)
      std::cout << "inequality checks: " << trace.inequality_checks << ", violations: "
                << trace.inequality_violations << '\n';
    if (trace.inequality_violations > 0) {
      std::cerr << "first violation: " << trace.first_violation << '\n';
      return kRunFailure;
    }
    return kOk;
  } catch (const RunError& e) {
    auto out = open_out(a.out);
    write_trace_csv(out, e.partial());
    std::cerr << "run failed: " << e.what() << '\n';
    return kRunFailure;
  }
}

int cmd_experiment(const std::string& config, const std::string& out_dir, std::optional<std::size_t> threads) {
  SuiteConfig cfg = load_suite_config(config);
  if (threads) cfg.threads = *threads;
  const SuiteReport report = run_suite(cfg);
  emit_report(report, out_dir);
  std::cout << render_summary(report);
  return report.failures() > 0 ? kRunFailure : kOk;
}

struct RateArgs {
  std::string trace, quantity, window, label;
  std::optional<double> fstar;
};

int cmd_ratefit(const RateArgs& a) {
  std::string quantity;
  std::pair<std::size_t, std::size_t> window;
  try {
    quantity = canonical_quantity(a.quantity);
    window = parse_window(a.window);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::ifstream in(a.trace);
  if (!in) throw UsageError("cannot open '" + a.trace + "'");

  RateFit fit;
  const CsvTable table = read_csv(in);
  if (table.has_column("label")) {
    // aggregate.csv: pick one curve.
    const auto lc = table.column("label"), kc = table.column("k"), qc = table.column(quantity);
    std::string label = a.label;
    if (label.empty()) {
      for (const auto& row : table.rows)
        if (label.empty()) label = row[lc];
        else if (row[lc] != label) throw UsageError("aggregate has several curves; choose one with --label");
    }
    std::vector<std::size_t> t;
    std::vector<double> v;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (table.rows[r][lc] != label) continue;
      const auto k = table.number(r, kc);
      const auto val = table.number(r, qc);
      if (!k || !val) continue;
      t.push_back(static_cast<std::size_t>(*k));
      v.push_back(*val);
    }
    if (t.empty()) throw UsageError("no rows for label '" + label + "'");
    fit = fit_rate(t, v, window.first, window.second, quantity);
  } else {
    in.clear();
    in.seekg(0);
    const auto trace = read_trace_csv(in);
    if (quantity.starts_with("fgap") && !a.fstar) throw UsageError(quantity + " on a raw trace needs --fstar");
    fit = fit_rate(trace, quantity, window.first, window.second, a.fstar);
  }
  std::cout << std::setprecision(6) << "quantity " << fit.quantity << "\nwindow " << fit.t_min << ':' << fit.t_max
            << "\npoints " << fit.points << "\nslope " << fit.slope << "\nintercept " << fit.intercept
            << "\nr_squared " << fit.r_squared << '\n';
  return kOk;
}

struct DiagnoseArgs {
  std::string instance, gammas, deltas, out;
  double tol = 1e-9;
  std::size_t threads = 1;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  const ProblemInstance inst = load_instance_arg(a.instance);
  const auto gammas = parse_list(a.gammas, "--gammas");
  const auto deltas = parse_list(a.deltas, "--deltas");
  if (!inst.objective().smooth()) throw UsageError("diagnose needs a differentiable objective");
  if (!(a.tol > 0.0)) throw UsageError("--tol must be > 0");

  const InfeasibilityScan scan = infeasibility_scan(inst, gammas, deltas, a.tol, a.threads);
  std::optional<GapCheck> gaps;
  if (inst.objective().mu() > 0.0) gaps = strong_convexity_gap_check(inst, gammas, deltas, a.tol, a.threads);

  auto out = open_out(a.out);
  out << "gamma,delta,solved,dist_X,f_value,f_gap_vs_true,level_threshold,level_ok,in_regime,gap_sq,gap_bound,"
         "gap_passed,note\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < scan.reports.size(); ++i) {
    const auto& r = scan.reports[i];
    out << format_double(r.params.gamma) << ',' << format_double(r.params.delta) << ',' << (r.solved ? 1 : 0) << ','
        << (r.solved ? format_double(r.dist_X) : "") << ',' << (r.solved ? format_double(r.f_value) : "") << ','
        << (r.solved ? format_double(r.f_gap_vs_true) : "") << ',' << format_double(r.level_threshold) << ','
        << (r.level_ok ? 1 : 0) << ',';
    if (gaps) {
      const auto& g = gaps->entries[i];
      out << (g.in_regime ? 1 : 0) << ',' << format_double(g.gap_sq) << ',' << format_double(g.bound) << ','
          << (g.passed ? 1 : 0) << ',' << g.note;
    } else {
      out << ",,,,";
    }
    if (!r.solved) {
      ++failed;
      out << (gaps ? "; " : "") << r.error;
    }
    out << '\n';
  }

  std::cout << "level sets: " << (scan.level_sets_ok ? "ok" : "FAIL") << '\n'
            << "monotone:   " << (scan.monotone_ok ? "ok" : "FAIL") << '\n'
            << "delta law:  " << (scan.ratios_ok ? "ok" : "FAIL") << " (" << scan.ratios_evaluated
            << " ratios evaluated";
  if (!scan.ratio_gamma) std::cout << "; every solution feasible";
  std::cout << ")\n";
  for (const auto& dr : scan.ratios) {
    std::cout << "  gamma " << dr.gamma << " delta " << dr.delta_hi << " -> " << dr.delta_lo << ": ";
    if (dr.ratio) std::cout << *dr.ratio << (dr.ok ? "" : " (out of range)") << '\n';
    else std::cout << "skipped (dist ~ 0)\n";
  }
  if (gaps)
    std::cout << "gap bound:  " << (gaps->all_passed ? "ok" : "FAIL") << " (" << gaps->evaluated
              << " pairs in regime)\n";
  return failed > 0 ? kRunFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental penalty method for linearly constrained convex problems"};
  app.require_subcommand(1);

  std::string spec_path, gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a random instance");
  gen->add_option("--spec", spec_path, "Generator spec (INI, [problem] section)")->required();
  gen->add_option("--out", gen_out, "Instance file to write")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Run the incremental penalty method on one instance");
  solve->add_option("--instance", sa.instance)->required();
  solve->add_option("--schedule", sa.schedule, "Schedule file (INI, [schedule] section)")->required();
  solve->add_option("--iters", sa.iters)->required();
  solve->add_option("--seed", sa.seed)->required();
  solve->add_option("--trace-every", sa.trace_every, "Record interval; 0 for geometric checkpoints");
  solve->add_option("--assert", sa.assert_level)->check(CLI::IsMember({"off", "cheap", "full"}));
  solve->add_option("--init", sa.init)->check(CLI::IsMember({"zero", "witness"}));
  solve->add_option("--method", sa.method)->check(CLI::IsMember({"incremental", "full_gradient"}));
  solve->add_flag("--allow-invalid-schedule", sa.allow_invalid);
  solve->add_option("--out", sa.out)->required();

  std::string cfg_path, out_dir;
  std::optional<std::size_t> threads;
  auto* exp = app.add_subcommand("experiment", "Run an experiment grid and write a report");
  exp->add_option("--config", cfg_path)->required();
  exp->add_option("--out-dir", out_dir)->required();
  exp->add_option("--threads", threads);

  RateArgs ra;
  auto* rate = app.add_subcommand("ratefit", "Fit a log-log slope to a trace or aggregate CSV");
  rate->add_option("--trace", ra.trace)->required();
  rate->add_option("--quantity", ra.quantity)->required();
  rate->add_option("--window", ra.window, "tmin:tmax")->required();
  rate->add_option("--fstar", ra.fstar, "Optimal value for fgap quantities on raw traces");
  rate->add_option("--label", ra.label, "Curve to fit in an aggregate CSV");

  DiagnoseArgs da;
  auto* diag = app.add_subcommand("diagnose", "Check penalized minimizers against the feasible set");
  diag->add_option("--instance", da.instance)->required();
  diag->add_option("--gammas", da.gammas)->required();
  diag->add_option("--deltas", da.deltas)->required();
  diag->add_option("--out", da.out)->required();
  diag->add_option("--tol", da.tol);
  diag->add_option("--threads", da.threads);

  app.add_flag_callback("--version", [] {
    std::cout << "incpen 1.0 (kernels: " << incpen::kernels::isa_name(incpen::kernels::active().isa) << ")\n";
    std::exit(0);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(spec_path, gen_out);
    if (*solve) return cmd_solve(sa);
    if (*exp) return cmd_experiment(cfg_path, out_dir, threads);
    if (*rate) return cmd_ratefit(ra);
    if (*diag) return cmd_diagnose(da);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailure;
  }
  return kConfigError;
}
