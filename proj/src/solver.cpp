#include "incpen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "incpen/csv.hpp"
#include "incpen/huber.hpp"
#include "incpen/kernels.hpp"
#include "incpen/projection.hpp"

namespace incpen {

AveragingAccumulator::AveragingAccumulator(std::size_t dim) : weighted_sum_(dim, 0.0) {}

void AveragingAccumulator::add(ConstSpan x, double weight) {
  require_dim(weighted_sum_.size(), x.size(), "accumulator");
  if (!(weight > 0.0)) throw InvalidArgument("accumulator: weights must be > 0");
  kernels::axpy(weight, x, weighted_sum_);
  weight_total_ += weight;
  ++count_;
}

Vector AveragingAccumulator::average() const {
  if (count_ == 0) throw InvalidArgument("accumulator: no iterates fed yet");
  Vector avg(weighted_sum_);
  for (double& v : avg) v /= weight_total_;
  return avg;
}

const AveragingAccumulator::Checkpoint& AveragingAccumulator::checkpoint() {
  checkpoints_.push_back({count_, weight_total_, weighted_sum_});
  return checkpoints_.back();
}

Vector AveragingAccumulator::truncated_average(const Checkpoint& cp) const {
  if (cp.tau >= count_) throw InvalidArgument("accumulator: truncated window is empty");
  const double w = weight_total_ - cp.weight_total;
  Vector avg(weighted_sum_.size());
  for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = (weighted_sum_[j] - cp.weighted_sum[j]) / w;
  return avg;
}

SolverState::SolverState(Vector x1, ScheduleTriple schedule, std::uint64_t seed)
    : x_(std::move(x1)),
      rng_(seed),
      schedule_(std::move(schedule)),
      avg_s_(x_.size()),
      avg_sinv_(x_.size()),
      grad_(x_.size()),
      next_(x_.size()) {
  if (x_.empty()) throw InvalidArgument("solver: empty initial point");
}

struct StepAccess {
  static StepRecord advance(SolverState& st, const ProblemInstance& inst, std::optional<std::size_t> index) {
    const ConstraintSystem& sys = inst.system();
    require_dim(sys.dim(), st.x_.size(), "solver step");
    const std::size_t k = st.k_;
    StepRecord rec;
    rec.k = k;
    rec.index = index;
    rec.s = st.schedule_.step(k);
    rec.gamma = st.schedule_.gamma(k);
    rec.delta = st.schedule_.delta(k);
    if (!(rec.delta > 0.0)) throw InvalidArgument("solver: delta_k must be > 0");

    inst.objective().subgradient(st.x_, st.grad_);
    rec.subgrad_norm = kernels::norm(st.grad_);
    if (index) {
      add_grad_h_delta(st.x_, sys[*index], rec.delta, rec.gamma, st.grad_);
    } else {
      add_avg_penalty_grad(st.x_, sys, rec.delta, rec.gamma, st.grad_);
    }
    st.next_ = st.x_;
    kernels::axpy(-rec.s, st.grad_, st.next_);

    const double next_norm = kernels::norm(st.next_);
    if (!std::isfinite(next_norm) || next_norm > 1e12) {
      throw DivergenceError("solver diverged at k = " + std::to_string(k) +
                                " (||x_{k+1}|| = " + std::to_string(next_norm) + ")",
                            st.x_, k);
    }

    st.avg_s_.add(st.x_, rec.s);
    st.avg_sinv_.add(st.x_, 1.0 / rec.s);
    st.stats_.max_subgrad_norm = std::max(st.stats_.max_subgrad_norm, rec.subgrad_norm);
    st.stats_.max_iterate_norm = std::max(st.stats_.max_iterate_norm, kernels::norm(st.x_));
    st.x_.swap(st.next_);
    ++st.k_;
    return rec;
  }

  static std::size_t draw(SolverState& st, std::size_t m) {
    return static_cast<std::size_t>(st.rng_.uniform_index(m));
  }
};

StepRecord step(SolverState& state, const ProblemInstance& inst) {
  const std::size_t i = StepAccess::draw(state, inst.system().size());
  return StepAccess::advance(state, inst, i);
}

StepRecord step_with_index(SolverState& state, const ProblemInstance& inst, std::size_t index) {
  if (index >= inst.system().size()) throw InvalidArgument("solver: constraint index out of range");
  return StepAccess::advance(state, inst, index);
}

StepRecord step_full_gradient(SolverState& state, const ProblemInstance& inst) {
  return StepAccess::advance(state, inst, std::nullopt);
}

Averages current_averages(const SolverState& state) {
  if (state.avg_s().count() == 0) throw InvalidArgument("current_averages: no completed steps");
  return {state.avg_s().average(), state.avg_sinv().average()};
}

Vector incremental_penalty_term(const ConstraintSystem& sys, ConstSpan x, std::size_t i,
                                double gamma, double delta) {
  Vector out(sys.dim(), 0.0);
  add_grad_h_delta(x, sys[i], delta, gamma, out);
  return out;
}

Vector full_penalty_term(const ConstraintSystem& sys, ConstSpan x, double gamma, double delta) {
  Vector out(sys.dim(), 0.0);
  add_avg_penalty_grad(x, sys, delta, gamma, out);
  return out;
}

InequalityCheck check_basic_iter_inequality(ConstSpan x_k, ConstSpan x_k1, ConstSpan y,
                                            const ProblemInstance& inst,
                                            const ScheduleTriple& sch, std::size_t k,
                                            std::size_t i_k) {
  const ConstraintSystem& sys = inst.system();
  const Objective& f = inst.objective();
  if (max_violation(sys, y) > 1e-9) throw InvalidArgument("basic iteration check: y is not feasible");
  const double s = sch.step(k);
  const double gamma = sch.gamma(k);
  const double delta = sch.delta(k);
  const HalfspaceConstraint& c = sys[i_k];
  const double dist_i = std::max(0.0, c.residual(x_k)) / c.norm_a();
  const double gnorm = kernels::norm(f.subgradient(x_k));
  const double dk = kernels::sqdist(x_k, y);

  InequalityCheck out;
  out.lhs = kernels::sqdist(x_k1, y);
  out.rhs = (1.0 - f.mu() * s) * dk + 2.0 * s * (f.value(y) - f.value(x_k)) +
            s * gamma * delta / (2.0 * sys.alpha_min()) - 2.0 * s * gamma * dist_i +
            s * s * (gnorm + gamma) * (gnorm + gamma);
  out.tolerance = 1e-9 * (1.0 + dk);
  out.holds = out.lhs <= out.rhs + out.tolerance;
  return out;
}

bool assert_basic_iter_inequality(ConstSpan x_k, ConstSpan x_k1, ConstSpan y,
                                  const ProblemInstance& inst, const ScheduleTriple& sch,
                                  std::size_t k, std::size_t i_k) {
  return check_basic_iter_inequality(x_k, x_k1, y, inst, sch, k, i_k).holds;
}

std::string_view to_string(AssertLevel a) noexcept {
  switch (a) {
    case AssertLevel::off:
      return "off";
    case AssertLevel::cheap:
      return "cheap";
    case AssertLevel::full:
      return "full";
  }
  return "off";
}

AssertLevel parse_assert_level(std::string_view text) {
  if (text == "off") return AssertLevel::off;
  if (text == "cheap") return AssertLevel::cheap;
  if (text == "full") return AssertLevel::full;
  throw InvalidArgument("unknown assert level '" + std::string(text) + "'");
}

std::string_view to_string(Method m) noexcept {
  return m == Method::incremental ? "incremental" : "full_gradient";
}

InitKind parse_init_kind(std::string_view text) {
  if (text == "zero") return InitKind::zero;
  if (text == "witness") return InitKind::witness;
  if (text == "explicit") return InitKind::explicit_point;
  throw InvalidArgument("unknown init '" + std::string(text) + "'");
}

std::vector<std::size_t> geometric_checkpoints(std::size_t iters, double ratio) {
  std::vector<std::size_t> out;
  for (double t = 1.0; std::ceil(t) <= static_cast<double>(iters); t *= ratio) {
    const auto k = static_cast<std::size_t>(std::ceil(t));
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  if (out.empty() || out.back() != iters) out.push_back(iters);
  return out;
}

namespace {

std::vector<std::size_t> record_points(const RunOptions& opts) {
  if (opts.trace_every == 0) return geometric_checkpoints(opts.iters);
  std::set<std::size_t> pts{1, opts.iters};
  for (std::size_t k = opts.trace_every; k <= opts.iters; k += opts.trace_every) pts.insert(k);
  return {pts.begin(), pts.end()};
}

std::optional<double> rel_err(ConstSpan x, const std::optional<KnownOptimum>& opt) {
  if (!opt) return std::nullopt;
  const double err = std::sqrt(kernels::sqdist(x, opt->x));
  const double scale = kernels::norm(opt->x);
  return scale > 0.0 ? err / scale : err;
}

}  // namespace

RunTrace run(const ProblemInstance& inst, const ScheduleTriple& sch, const RunOptions& opts) {
  if (opts.iters < 1) throw InvalidArgument("run: iters must be >= 1");
  const AssumptionReport report = validate_assumption(sch);
  if (!report.passed() && !opts.allow_invalid_schedule)
    throw InvalidArgument("run: schedule fails the convergence conditions: " + report.summary());

  const std::size_t n = inst.dim();
  Vector x1;
  switch (opts.init) {
    case InitKind::zero:
      x1.assign(n, 0.0);
      break;
    case InitKind::witness:
      x1.assign(inst.witness().begin(), inst.witness().end());
      break;
    case InitKind::explicit_point:
      require_dim(n, opts.init_point.size(), "run init point");
      x1 = opts.init_point;
      break;
  }

  const Objective& f = inst.objective();
  const ConstraintSystem& sys = inst.system();
  const auto& opt = inst.known_optimum();

  RunTrace trace;
  trace.instance_id = inst.id();
  trace.seed = opts.seed;
  trace.schedule = sch.describe();
  trace.method = opts.method;
  trace.iters = opts.iters;
  if (opt) trace.f_star = f.value(opt->x);

  std::vector<Vector> anchors{Vector(inst.witness().begin(), inst.witness().end())};
  if (opt && max_violation(sys, opt->x) <= 1e-9) anchors.push_back(opt->x);

  const std::vector<std::size_t> points = record_points(opts);
  std::size_t next_point = 0;

  SolverState state(std::move(x1), sch, opts.seed);
  Vector xk(n);
  for (std::size_t k = 1; k <= opts.iters; ++k) {
    const bool record = next_point < points.size() && points[next_point] == k;
    const bool check = opts.method == Method::incremental &&
                       (opts.assert_level == AssertLevel::full || (opts.assert_level == AssertLevel::cheap && record));
    if (record || check) xk.assign(state.x().begin(), state.x().end());

    StepRecord rec;
    try {
      rec = opts.method == Method::incremental ? step(state, inst) : step_full_gradient(state, inst);
    } catch (const DivergenceError& e) {
      trace.final_x = e.last_finite();
      throw RunError(e.what(), std::move(trace));
    }

    if (check) {
      for (const Vector& y : anchors) {
        const InequalityCheck c = check_basic_iter_inequality(xk, state.x(), y, inst, sch, k, *rec.index);
        ++trace.inequality_checks;
        if (!c.holds) {
          if (trace.inequality_violations == 0)
            trace.first_violation = "k = " + std::to_string(k) + ": lhs " + format_double(c.lhs) +
                                    " > rhs " + format_double(c.rhs) + " + tol " + format_double(c.tolerance);
          ++trace.inequality_violations;
        }
      }
    }

    if (record) {
      ++next_point;
      TraceRecord r;
      r.k = k;
      const Vector av_s = state.avg_s().average();
      const Vector av_i = state.avg_sinv().average();
      r.f_x = f.value(xk);
      r.f_avg_s = f.value(av_s);
      r.f_avg_sinv = f.value(av_i);
      if (opts.track_distances) {
        r.dist_x = dist_to_feasible(xk, sys);
        r.dist_avg_s = dist_to_feasible(av_s, sys);
        r.dist_avg_sinv = dist_to_feasible(av_i, sys);
      }
      r.max_violation = max_violation(sys, xk);
      r.rel_err_x = rel_err(xk, opt);
      r.rel_err_avg_s = rel_err(av_s, opt);
      r.rel_err_avg_sinv = rel_err(av_i, opt);
      r.s_k = rec.s;
      r.gamma_k = rec.gamma;
      r.delta_k = rec.delta;
      r.max_subgrad_norm = state.stats().max_subgrad_norm;
      trace.records.push_back(r);
    }
  }
  trace.final_x.assign(state.x().begin(), state.x().end());
  trace.final_avg_s = state.avg_s().average();
  trace.final_avg_sinv = state.avg_sinv().average();
  return trace;
}

const char* const kTraceHeader =
    "k,f_x,f_avg_s,f_avg_sinv,dist_x,dist_avg_s,dist_avg_sinv,max_violation,"
    "rel_err_x,rel_err_avg_s,rel_err_avg_sinv,s_k,gamma_k,delta_k,max_subgrad_norm";

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << format_double(r.f_x) << ',' << format_double(r.f_avg_s) << ','
        << format_double(r.f_avg_sinv) << ',' << csv_field(r.dist_x) << ',' << csv_field(r.dist_avg_s)
        << ',' << csv_field(r.dist_avg_sinv) << ',' << format_double(r.max_violation) << ','
        << csv_field(r.rel_err_x) << ',' << csv_field(r.rel_err_avg_s) << ','
        << csv_field(r.rel_err_avg_sinv) << ',' << format_double(r.s_k) << ','
        << format_double(r.gamma_k) << ',' << format_double(r.delta_k) << ','
        << format_double(r.max_subgrad_norm) << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const auto col = [&](const char* name) { return t.column(name); };
  const std::size_t ck = col("k"), cfx = col("f_x"), cfs = col("f_avg_s"), cfi = col("f_avg_sinv"),
                    cdx = col("dist_x"), cds = col("dist_avg_s"), cdi = col("dist_avg_sinv"),
                    cmv = col("max_violation"), crx = col("rel_err_x"), crs = col("rel_err_avg_s"),
                    cri = col("rel_err_avg_sinv"), cs = col("s_k"), cg = col("gamma_k"),
                    cd = col("delta_k"), cm = col("max_subgrad_norm");
  std::vector<TraceRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    TraceRecord r;
    r.k = static_cast<std::size_t>(std::stoull(t.rows[i][ck]));
    r.f_x = t.number(i, cfx).value_or(NAN);
    r.f_avg_s = t.number(i, cfs).value_or(NAN);
    r.f_avg_sinv = t.number(i, cfi).value_or(NAN);
    r.dist_x = t.number(i, cdx);
    r.dist_avg_s = t.number(i, cds);
    r.dist_avg_sinv = t.number(i, cdi);
    r.max_violation = t.number(i, cmv).value_or(NAN);
    r.rel_err_x = t.number(i, crx);
    r.rel_err_avg_s = t.number(i, crs);
    r.rel_err_avg_sinv = t.number(i, cri);
    r.s_k = t.number(i, cs).value_or(NAN);
    r.gamma_k = t.number(i, cg).value_or(NAN);
    r.delta_k = t.number(i, cd).value_or(NAN);
    r.max_subgrad_norm = t.number(i, cm).value_or(NAN);
    out.push_back(r);
  }
  return out;
}

}  // namespace incpen
