#pragma once

// Random incremental penalty subgradient method
//
//   x_{k+1} = x_k - s_k [ g_f(x_k) + gamma_k grad h_{delta_k}(x_k; a_{i_k}, b_{i_k}) ]
//
// with i_k uniform on {0..m-1}, its full-gradient counterpart, the two
// weighted iterate averages (weights s_k and 1/s_k) and run orchestration.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "incpen/error.hpp"
#include "incpen/instance.hpp"
#include "incpen/rng.hpp"
#include "incpen/schedules.hpp"

namespace incpen {

// Running weighted sum of iterates. Truncated averages come from stored
// checkpoints rather than iterate histories.
class AveragingAccumulator {
 public:
  struct Checkpoint {
    std::size_t tau = 0;
    double weight_total = 0.0;
    Vector weighted_sum;
  };

  explicit AveragingAccumulator(std::size_t dim = 0);

  void add(ConstSpan x, double weight);

  std::size_t count() const noexcept { return count_; }
  double weight_total() const noexcept { return weight_total_; }
  ConstSpan weighted_sum() const noexcept { return weighted_sum_; }
  Vector average() const;

  // Snapshot (tau, S_tau, sum_{k<=tau} w_k x_k) at the current count.
  const Checkpoint& checkpoint();
  const std::vector<Checkpoint>& checkpoints() const noexcept { return checkpoints_; }

  // Average of x_k over tau < k <= t with the same weights.
  Vector truncated_average(const Checkpoint& cp) const;

 private:
  std::size_t count_ = 0;
  double weight_total_ = 0.0;
  Vector weighted_sum_;
  std::vector<Checkpoint> checkpoints_;
};

struct RunStats {
  double max_subgrad_norm = 0.0;
  double max_iterate_norm = 0.0;
};

class SolverState {
 public:
  SolverState(Vector x1, ScheduleTriple schedule, std::uint64_t seed);

  ConstSpan x() const noexcept { return x_; }
  std::size_t k() const noexcept { return k_; }
  const CounterRng& rng() const noexcept { return rng_; }
  const ScheduleTriple& schedule() const noexcept { return schedule_; }
  const AveragingAccumulator& avg_s() const noexcept { return avg_s_; }
  const AveragingAccumulator& avg_sinv() const noexcept { return avg_sinv_; }
  AveragingAccumulator& avg_s() noexcept { return avg_s_; }
  AveragingAccumulator& avg_sinv() noexcept { return avg_sinv_; }
  const RunStats& stats() const noexcept { return stats_; }

 private:
  friend struct StepAccess;

  Vector x_;
  std::size_t k_ = 1;
  CounterRng rng_;
  ScheduleTriple schedule_;
  AveragingAccumulator avg_s_;
  AveragingAccumulator avg_sinv_;
  RunStats stats_;
  Vector grad_;
  Vector next_;
};

struct StepRecord {
  std::size_t k = 0;                 // index of the iterate that was updated
  std::optional<std::size_t> index;  // sampled constraint (incremental steps)
  double s = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double subgrad_norm = 0.0;         // ||g_f(x_k)||
};

// One incremental step: exactly one index draw from the state's generator.
// Feeds x_k into both accumulators before moving. Throws DivergenceError
// (state left at x_k) on a non-finite iterate or ||x|| > 1e12.
StepRecord step(SolverState& state, const ProblemInstance& inst);

// Incremental step with a caller-chosen constraint; no draw.
StepRecord step_with_index(SolverState& state, const ProblemInstance& inst, std::size_t index);

// Same update with the averaged penalty gradient over all m constraints.
StepRecord step_full_gradient(SolverState& state, const ProblemInstance& inst);

struct Averages {
  Vector x_av;      // s-weighted
  Vector x_bar_av;  // 1/s-weighted
};

// Requires at least one completed step.
Averages current_averages(const SolverState& state);

// gamma * grad h_delta(x; a_i, b_i) and its mean over i.
Vector incremental_penalty_term(const ConstraintSystem& sys, ConstSpan x, std::size_t i,
                                double gamma, double delta);
Vector full_penalty_term(const ConstraintSystem& sys, ConstSpan x, double gamma, double delta);

struct InequalityCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
};

// Per-path bound for y in X:
//   ||x_{k+1} - y||^2 <= (1 - mu s_k)||x_k - y||^2 + 2 s_k (f(y) - f(x_k))
//                        + s_k gamma_k delta_k / (2 alpha_min)
//                        - 2 s_k gamma_k dist(x_k, X_{i_k})
//                        + s_k^2 (||g_f(x_k)|| + gamma_k)^2
// checked with additive tolerance 1e-9 (1 + ||x_k - y||^2). The subgradient
// is recomputed from the objective, so it must be deterministic.
InequalityCheck check_basic_iter_inequality(ConstSpan x_k, ConstSpan x_k1, ConstSpan y,
                                            const ProblemInstance& inst,
                                            const ScheduleTriple& sch, std::size_t k,
                                            std::size_t i_k);
bool assert_basic_iter_inequality(ConstSpan x_k, ConstSpan x_k1, ConstSpan y,
                                  const ProblemInstance& inst, const ScheduleTriple& sch,
                                  std::size_t k, std::size_t i_k);

enum class AssertLevel { off, cheap, full };
enum class Method { incremental, full_gradient };
enum class InitKind { zero, witness, explicit_point };

std::string_view to_string(AssertLevel a) noexcept;
AssertLevel parse_assert_level(std::string_view text);
std::string_view to_string(Method m) noexcept;
InitKind parse_init_kind(std::string_view text);

struct RunOptions {
  std::size_t iters = 1;
  std::uint64_t seed = 0;
  // Record every `trace_every` iterations (plus k = 1 and the last); 0 means
  // geometric checkpoints ceil(1.25^j).
  std::size_t trace_every = 0;
  AssertLevel assert_level = AssertLevel::off;
  Method method = Method::incremental;
  InitKind init = InitKind::zero;
  Vector init_point;                // used with InitKind::explicit_point
  bool allow_invalid_schedule = false;
  bool track_distances = true;      // Dykstra distances at every record
};

struct TraceRecord {
  std::size_t k = 0;
  double f_x = 0.0, f_avg_s = 0.0, f_avg_sinv = 0.0;
  std::optional<double> dist_x, dist_avg_s, dist_avg_sinv;
  double max_violation = 0.0;
  std::optional<double> rel_err_x, rel_err_avg_s, rel_err_avg_sinv;
  double s_k = 0.0, gamma_k = 0.0, delta_k = 0.0;
  double max_subgrad_norm = 0.0;
};

struct RunTrace {
  std::string instance_id;
  std::uint64_t seed = 0;
  std::string schedule;
  Method method = Method::incremental;
  std::size_t iters = 0;
  std::optional<double> f_star;
  std::vector<TraceRecord> records;
  Vector final_x;          // x_{iters+1}
  Vector final_avg_s;
  Vector final_avg_sinv;
  std::size_t inequality_checks = 0;
  std::size_t inequality_violations = 0;
  std::string first_violation;
};

class RunError : public Error {
 public:
  RunError(const std::string& what, RunTrace partial) : Error(what), partial_(std::move(partial)) {}
  const RunTrace& partial() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

// Throws InvalidArgument if the schedule fails validate_assumption and the
// override flag is unset; RunError (with the trace so far) on divergence.
RunTrace run(const ProblemInstance& inst, const ScheduleTriple& sch, const RunOptions& opts);

std::vector<std::size_t> geometric_checkpoints(std::size_t iters, double ratio = 1.25);

// CSV with header
//   k,f_x,f_avg_s,f_avg_sinv,dist_x,dist_avg_s,dist_avg_sinv,max_violation,
//   rel_err_x,rel_err_avg_s,rel_err_avg_sinv,s_k,gamma_k,delta_k,max_subgrad_norm
// Missing values are empty fields; numbers carry 17 significant digits.
void write_trace_csv(std::ostream& out, const RunTrace& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

extern const char* const kTraceHeader;

}  // namespace incpen
