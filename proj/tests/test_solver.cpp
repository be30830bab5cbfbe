#include <doctest.h>

#include <cmath>
#include <sstream>

#include "incpen/error.hpp"
#include "incpen/huber.hpp"
#include "incpen/kernels.hpp"
#include "incpen/projection.hpp"
#include "incpen/solver.hpp"
#include "test_util.hpp"

using namespace incpen;

namespace {

ScheduleTriple constant_schedule(double s, double gamma, double delta) {
  return ScheduleTriple::custom([s](std::size_t) { return s; }, [gamma](std::size_t) { return gamma; },
                                [delta](std::size_t) { return delta; });
}

ProblemInstance random_instance(std::uint64_t seed, std::size_t m, std::size_t n, bool quadratic, double shift) {
  CounterRng rng(seed);
  auto sys = test::random_system(rng, m, n);
  const Vector x0 = test::random_vector(rng, n, shift);
  Objective f = quadratic ? Objective::quadratic_shift(x0) : Objective::l1_shift(x0);
  ProblemInstance inst(std::move(f), std::move(sys), Vector(n, 0.0), std::nullopt, "rand", seed);
  return inst.with_known_optimum(reference_solution(inst, 3000));
}

std::string serialize(const RunTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("hand-computed incremental step") {
  const ProblemInstance inst(Objective::quadratic_shift({2.0}), test::single({1.0}, 0.0), {-1.0}, std::nullopt,
                             "one-d", 0);
  SolverState st({0.0}, constant_schedule(0.1, 1.0, 0.5), 1);
  const StepRecord rec = step_with_index(st, inst, 0);
  CHECK(st.x()[0] == doctest::Approx(0.35));
  CHECK(rec.k == 1);
  CHECK(st.k() == 2);
  CHECK(*rec.index == 0);
  CHECK(rec.subgrad_norm == doctest::Approx(4.0));
  CHECK(st.rng().counter() == 0);
  CHECK_THROWS_AS(step_with_index(st, inst, 1), InvalidArgument);
}

TEST_CASE("interior steps ignore the penalty") {
  CounterRng rng(2);
  const auto sys = test::random_system(rng, 10, 3);
  const Vector x0{0.01, 0.02, -0.01};
  const ProblemInstance inst(Objective::quadratic_shift(x0), sys, {0.0, 0.0, 0.0}, std::nullopt, "in", 0);

  SolverState at_opt(x0, constant_schedule(0.1, 5.0, 0.01), 3);
  step(at_opt, inst);
  CHECK(test::dist2(Vector(at_opt.x().begin(), at_opt.x().end()), x0) == 0.0);

  const Vector start{0.0, 0.0, 0.0};
  SolverState inc(start, constant_schedule(0.1, 5.0, 0.01), 3);
  step(inc, inst);
  for (std::size_t j = 0; j < 3; ++j) CHECK(inc.x()[j] == doctest::Approx(0.2 * x0[j]));
  SolverState full(start, constant_schedule(0.1, 5.0, 0.01), 3);
  step_full_gradient(full, inst);
  for (std::size_t j = 0; j < 3; ++j) CHECK(full.x()[j] == doctest::Approx(0.2 * x0[j]));
}

TEST_CASE("one draw per incremental step, none per full step") {
  const auto inst = random_instance(4, 20, 3, true, 3.0);
  SolverState a(Vector(3, 0.0), ScheduleTriple::simulation_sc(1.0), 9);
  for (int i = 0; i < 25; ++i) step(a, inst);
  CHECK(a.rng().counter() == 25);
  SolverState b(Vector(3, 0.0), ScheduleTriple::simulation_sc(1.0), 9);
  for (int i = 0; i < 25; ++i) step_full_gradient(b, inst);
  CHECK(b.rng().counter() == 0);
}

TEST_CASE("full gradient with one constraint equals the incremental step") {
  const ProblemInstance inst(Objective::quadratic_shift({2.0, 1.0}), test::single({1.0, 1.0}, 0.0), {-1.0, -1.0},
                             std::nullopt, "m1", 0);
  const auto sch = ScheduleTriple::simulation_sc(3.0);
  SolverState a({0.5, 0.2}, sch, 1), b({0.5, 0.2}, sch, 1);
  for (int i = 0; i < 10; ++i) {
    step(a, inst);
    step_full_gradient(b, inst);
  }
  for (std::size_t j = 0; j < 2; ++j) CHECK(a.x()[j] == doctest::Approx(b.x()[j]).epsilon(1e-14));
}

TEST_CASE("averaged forced steps equal the full-gradient step") {
  const auto inst = random_instance(6, 15, 4, true, 3.0);
  const auto sch = ScheduleTriple::simulation_sc(2.0);
  const Vector x{1.0, -2.0, 0.5, 3.0};
  Vector mean(4, 0.0);
  for (std::size_t i = 0; i < 15; ++i) {
    SolverState st(x, sch, 0);
    step_with_index(st, inst, i);
    for (std::size_t j = 0; j < 4; ++j) mean[j] += st.x()[j] / 15.0;
  }
  SolverState full(x, sch, 0);
  step_full_gradient(full, inst);
  for (std::size_t j = 0; j < 4; ++j) CHECK(mean[j] == doctest::Approx(full.x()[j]).epsilon(1e-12));
}

TEST_CASE("sampled penalty gradient is unbiased") {
  const auto inst = random_instance(8, 40, 3, true, 3.0);
  const auto& sys = inst.system();
  CounterRng rng(77);
  const double gamma = 2.0, delta = 0.3;
  const int draws = 10000;
  for (int point = 0; point < 5; ++point) {
    const Vector x = test::random_vector(rng, 3, 2.0);
    const Vector full = full_penalty_term(sys, x, gamma, delta);
    Vector sum(3, 0.0), sumsq(3, 0.0);
    for (int d = 0; d < draws; ++d) {
      const Vector g = incremental_penalty_term(sys, x, rng.uniform_index(sys.size()), gamma, delta);
      for (std::size_t j = 0; j < 3; ++j) {
        sum[j] += g[j];
        sumsq[j] += g[j] * g[j];
      }
    }
    for (std::size_t j = 0; j < 3; ++j) {
      const double mean = sum[j] / draws;
      const double var = sumsq[j] / draws - mean * mean;
      const double se = std::sqrt(std::max(var, 0.0) / draws);
      CHECK(std::abs(mean - full[j]) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("accumulator averages") {
  AveragingAccumulator acc(2);
  acc.add(Vector{1.0, 1.0}, 1.0);
  acc.add(Vector{5.0, -3.0}, 3.0);
  const Vector av = acc.average();
  CHECK(av[0] == doctest::Approx(4.0));
  CHECK(av[1] == doctest::Approx(-2.0));
  CHECK(acc.weight_total() == 4.0);
  CHECK(acc.count() == 2);

  AveragingAccumulator constant(3);
  for (int i = 1; i <= 10; ++i) constant.add(Vector{1.5, -2.0, 0.0}, 1.0 / i);
  const Vector c = constant.average();
  CHECK(c[0] == doctest::Approx(1.5));
  CHECK(c[1] == doctest::Approx(-2.0));

  CHECK_THROWS_AS(AveragingAccumulator(2).average(), InvalidArgument);
  CHECK_THROWS_AS(acc.add(Vector{1.0, 1.0}, 0.0), InvalidArgument);
}

TEST_CASE("truncated averages satisfy the convex-combination identity") {
  CounterRng rng(12);
  AveragingAccumulator acc(3);
  Vector direct_tail(3, 0.0);
  double tail_w = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const Vector x = test::random_vector(rng, 3);
    const double w = 1.0 / std::sqrt(static_cast<double>(k));
    acc.add(x, w);
    if (k == 100) (void)acc.checkpoint();
    if (k > 100) {
      for (std::size_t j = 0; j < 3; ++j) direct_tail[j] += w * x[j];
      tail_w += w;
    }
  }
  const auto& cp = acc.checkpoints().front();
  const Vector trunc = acc.truncated_average(cp);
  const Vector full = acc.average();
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(trunc[j] == doctest::Approx(direct_tail[j] / tail_w).epsilon(1e-12));
    const double head = cp.weighted_sum[j] / cp.weight_total;
    const double rebuilt = (cp.weight_total * head + (acc.weight_total() - cp.weight_total) * trunc[j]) / acc.weight_total();
    CHECK(std::abs(rebuilt - full[j]) <= 1e-12 * (std::abs(full[j]) + 1.0));
  }
}

TEST_CASE("current averages need a step") {
  const auto inst = random_instance(3, 5, 2, true, 1.0);
  SolverState st({0.0, 0.0}, ScheduleTriple::simulation_sc(1.0), 0);
  CHECK_THROWS_AS(current_averages(st), InvalidArgument);
  step(st, inst);
  const Averages av = current_averages(st);
  CHECK(av.x_av == Vector{0.0, 0.0});
  CHECK(av.x_bar_av == Vector{0.0, 0.0});
}

TEST_CASE("runs are deterministic") {
  const auto inst = random_instance(5, 50, 4, true, 3.0);
  RunOptions opts;
  opts.iters = 3000;
  opts.seed = 123;
  const auto sch = ScheduleTriple::simulation_sc(10.0);
  const std::string a = serialize(run(inst, sch, opts));
  const std::string b = serialize(run(inst, sch, opts));
  CHECK(a == b);
  opts.seed = 124;
  CHECK(serialize(run(inst, sch, opts)) != a);
}

TEST_CASE("single-iteration run") {
  const auto inst = random_instance(5, 10, 3, true, 3.0);
  RunOptions opts;
  opts.iters = 1;
  opts.init = InitKind::witness;
  const RunTrace t = run(inst, ScheduleTriple::simulation_sc(1.0), opts);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].k == 1);
  CHECK(t.records[0].f_avg_s == t.records[0].f_x);
  CHECK(t.records[0].f_avg_sinv == t.records[0].f_x);
  CHECK(*t.records[0].dist_x == 0.0);
}

TEST_CASE("run rejects invalid schedules unless overridden") {
  const auto inst = random_instance(5, 10, 3, true, 3.0);
  RunOptions opts;
  opts.iters = 10;
  CHECK_THROWS_AS(run(inst, ScheduleTriple::simulation_cvx(1.0, 1.0), opts), InvalidArgument);
  opts.allow_invalid_schedule = true;
  CHECK_NOTHROW(run(inst, ScheduleTriple::simulation_cvx(1.0, 1.0), opts));
  opts.iters = 0;
  CHECK_THROWS_AS(run(inst, ScheduleTriple::simulation_sc(1.0), opts), InvalidArgument);
}

TEST_CASE("trace checkpoints") {
  const auto g = geometric_checkpoints(100);
  CHECK(g.front() == 1);
  CHECK(g.back() == 100);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK(std::find(g.begin(), g.end(), 2) != g.end());

  const auto inst = random_instance(5, 10, 3, true, 3.0);
  RunOptions opts;
  opts.iters = 95;
  opts.trace_every = 10;
  const RunTrace t = run(inst, ScheduleTriple::simulation_sc(1.0), opts);
  std::vector<std::size_t> ks;
  for (const auto& r : t.records) ks.push_back(r.k);
  CHECK(ks == std::vector<std::size_t>{1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95});
}

TEST_CASE("per-path inequality holds on full-assert runs") {
  for (bool quadratic : {true, false}) {
    const auto inst = random_instance(quadratic ? 14 : 15, 30, 4, quadratic, 3.0);
    RunOptions opts;
    opts.iters = 2000;
    opts.assert_level = AssertLevel::full;
    opts.seed = 5;
    const auto sch = quadratic ? ScheduleTriple::simulation_sc(5.0) : ScheduleTriple::polylog_convex(0.5, 0.1, 0.75);
    const RunTrace t = run(inst, sch, opts);
    CHECK(t.inequality_checks >= 2000);
    CHECK(t.inequality_violations == 0);
  }
}

TEST_CASE("corrupted iterates violate the per-path inequality") {
  const auto inst = random_instance(16, 30, 4, true, 3.0);
  const auto sch = ScheduleTriple::simulation_sc(5.0);
  SolverState st(Vector(4, 0.0), sch, 8);
  CounterRng noise(99);
  const Vector y(inst.witness().begin(), inst.witness().end());
  int caught = 0;
  for (std::size_t k = 1; k <= 200; ++k) {
    const Vector xk(st.x().begin(), st.x().end());
    const StepRecord rec = step(st, inst);
    const Vector xk1(st.x().begin(), st.x().end());
    CHECK(assert_basic_iter_inequality(xk, xk1, y, inst, sch, k, *rec.index));
    Vector dir = test::random_vector(noise, 4);
    const double nd = test::norm2(dir);
    Vector bad = xk1;
    for (std::size_t j = 0; j < 4; ++j) bad[j] += 10.0 * rec.s * dir[j] / nd;
    if (!assert_basic_iter_inequality(xk, bad, y, inst, sch, k, *rec.index)) ++caught;
  }
  CHECK(caught > 0);
  CHECK_THROWS_AS(check_basic_iter_inequality(Vector(4, 0.0), Vector(4, 0.0), Vector(4, 100.0), inst, sch, 1, 0),
                  InvalidArgument);
}

TEST_CASE("divergence is reported with the last finite iterate") {
  const ProblemInstance inst(Objective::quadratic_shift({1.0}), test::single({1.0}, 10.0), {0.0}, std::nullopt,
                             "blow", 0);
  SolverState st({2.0}, constant_schedule(5.0, 1.0, 1.0), 0);
  bool threw = false;
  for (int i = 0; i < 200 && !threw; ++i) {
    try {
      step(st, inst);
    } catch (const DivergenceError& e) {
      threw = true;
      CHECK(std::isfinite(e.last_finite()[0]));
      CHECK(e.last_finite()[0] == st.x()[0]);
    }
  }
  CHECK(threw);

  RunOptions opts;
  opts.iters = 500;
  opts.allow_invalid_schedule = true;
  try {
    (void)run(inst, constant_schedule(5.0, 1.0, 1.0), opts);
    FAIL("expected RunError");
  } catch (const RunError& e) {
    CHECK(!e.partial().records.empty());
  }
}

TEST_CASE("trace csv round trip") {
  const auto inst = random_instance(5, 10, 3, true, 3.0);
  RunOptions opts;
  opts.iters = 200;
  const RunTrace t = run(inst, ScheduleTriple::simulation_sc(1.0), opts);
  std::stringstream ss;
  write_trace_csv(ss, t);
  std::string header;
  std::getline(ss, header);
  CHECK(header == kTraceHeader);
  ss.seekg(0);
  const auto back = read_trace_csv(ss);
  REQUIRE(back.size() == t.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].k == t.records[i].k);
    CHECK(back[i].f_avg_s == t.records[i].f_avg_s);
    CHECK(back[i].rel_err_x == t.records[i].rel_err_x);
    CHECK(back[i].dist_avg_sinv == t.records[i].dist_avg_sinv);
  }
}

TEST_CASE("subgradient statistic is finite and monotone") {
  const auto inst = random_instance(5, 20, 3, false, 3.0);
  RunOptions opts;
  opts.iters = 2000;
  const RunTrace t = run(inst, ScheduleTriple::polylog_convex(0.5, 0.1, 0.75), opts);
  double prev = 0.0;
  for (const auto& r : t.records) {
    CHECK(std::isfinite(r.max_subgrad_norm));
    CHECK(r.max_subgrad_norm >= prev);
    prev = r.max_subgrad_norm;
  }
}
