#pragma once

// Random instance generation, multi-run suites, log-log rate fits and report
// files (CSV, summary text, SVG charts).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "incpen/instance.hpp"
#include "incpen/schedules.hpp"
#include "incpen/solver.hpp"

namespace incpen {

enum class OptimumLocation { inside, outside };

std::string_view to_string(OptimumLocation loc) noexcept;
OptimumLocation parse_location(std::string_view text);

struct GeneratorSpec {
  std::size_t n = 10;
  std::size_t m = 100;
  ObjectiveKind objective_kind = ObjectiveKind::quadratic_shift;
  OptimumLocation location = OptimumLocation::inside;
  std::uint64_t seed = 1;
  double constraint_scale = 1.0;      // std of the constraint-matrix entries
  std::size_t reference_iters = 2000; // l1 outside: projected-subgradient budget

  void validate() const;
  std::string id() const;   // e.g. "q-out-n10-m100-s1"
  std::string label() const;  // id without the seed
};

// A: row-major N(0, scale^2); x0: N(0, 1). inside: b = A x0 + |u|, witness
// x0. outside: b = A w + |u| with w, u redrawn (up to 100 times) until x0 is
// infeasible, witness w. Throws InvalidArgument if x0 stays feasible.
ProblemInstance generate(const GeneratorSpec& spec);

// Schedule parameters as written in config files. Unused keys for a kind are
// ignored; mu defaults to the objective's modulus.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::simulation_sc;
  double c = 0.5;
  double g = 0.1;
  double d = 1.0;
  std::optional<double> mu;
  double S = 1.0;
  double c_gamma = 1.0;
  bool c_gamma_per_constraint = false;  // effective c_gamma = c_gamma * m

  ScheduleTriple build(double objective_mu, std::size_t m) const;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t t_min = 0;
  std::size_t t_max = 0;
  std::size_t points = 0;
  std::string quantity;
};

// Least squares of log(value) on log(t) over points with t in [t_min, t_max].
// Throws InvalidArgument on fewer than 10 points or a nonpositive value
// (naming its checkpoint).
RateFit fit_rate(const std::vector<std::size_t>& t, const std::vector<double>& values,
                 std::size_t t_min, std::size_t t_max, std::string quantity = {});

// Tracked quantities: rel_err_{x,avg_s,avg_sinv}, fgap_{x,avg_s,avg_sinv}
// (|f - f*|) and dist_{x,avg_s,avg_sinv}. "dist_avg" aliases dist_avg_s.
const std::vector<std::string>& tracked_quantities();
std::string canonical_quantity(std::string_view name);
std::optional<double> quantity_value(const TraceRecord& r, std::string_view quantity,
                                     std::optional<double> f_star);

// Fit over a raw trace; fgap quantities need f_star.
RateFit fit_rate(const std::vector<TraceRecord>& trace, std::string_view quantity,
                 std::size_t t_min, std::size_t t_max, std::optional<double> f_star);

std::pair<std::size_t, std::size_t> parse_window(std::string_view text);

struct SuiteConfig {
  std::vector<GeneratorSpec> specs;  // grid points; seed is taken from `seeds`
  std::vector<std::uint64_t> seeds{1};
  std::size_t repetitions = 1;
  std::uint64_t run_seed = 0;
  ScheduleSpec schedule;
  std::map<ObjectiveKind, ScheduleSpec> schedule_overrides;
  RunOptions run;  // seed is derived per run
  std::vector<Method> methods{Method::incremental};
  std::size_t threads = 0;  // 0: hardware concurrency
  bool per_run_csv = true;
  bool svg = true;
  std::optional<std::pair<std::size_t, std::size_t>> fit_window;

  const ScheduleSpec& schedule_for(ObjectiveKind kind) const;
};

SuiteConfig parse_suite_config(std::istream& in);
SuiteConfig load_suite_config(const std::filesystem::path& path);
GeneratorSpec load_generator_spec(const std::filesystem::path& path);
ScheduleSpec load_schedule_spec(const std::filesystem::path& path);

struct RunResult {
  std::size_t spec_index = 0;
  std::uint64_t instance_seed = 0;
  std::size_t repetition = 0;
  Method method = Method::incremental;
  std::uint64_t solver_seed = 0;
  std::string instance_id;
  bool ok = false;
  std::string error;
  RunTrace trace;  // partial on failure
};

// Pointwise mean over the successful runs of one (spec, method) pair.
struct AggregateCurve {
  std::size_t spec_index = 0;
  Method method = Method::incremental;
  std::string label;
  std::size_t runs = 0;
  std::vector<std::size_t> k;
  std::map<std::string, std::vector<std::optional<double>>> values;

  std::vector<double> series(const std::string& quantity, std::vector<std::size_t>& t_out) const;
};

struct ScheduleVerdict {
  std::string label;
  std::string description;
  AssumptionReport report;
};

struct SuiteReport {
  SuiteConfig config;
  std::vector<RunResult> runs;  // ordered (spec, seed, repetition, method)
  std::vector<AggregateCurve> curves;
  std::vector<ScheduleVerdict> verdicts;

  std::size_t failures() const;
};

// Runs every (spec, seed, repetition, method) combination; failures are
// recorded per run. Throws InvalidArgument on an empty grid.
SuiteReport run_suite(const SuiteConfig& cfg);

// Aggregates are summed in (seed, repetition) order, so they do not depend
// on the order in which runs are listed.
std::vector<AggregateCurve> aggregate(const std::vector<RunResult>& runs,
                                      const std::vector<GeneratorSpec>& specs);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateCurve>& curves);
std::string render_svg(const std::vector<AggregateCurve>& curves, const std::string& quantity);
std::string render_summary(const SuiteReport& report);

// Writes aggregate.csv, summary.txt, runs/*.csv and <quantity>.svg into dir.
// Throws InvalidArgument (writing nothing) when the report has no runs.
void emit_report(const SuiteReport& report, const std::filesystem::path& dir);

}  // namespace incpen
