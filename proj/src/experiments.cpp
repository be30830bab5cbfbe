#include "incpen/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "incpen/csv.hpp"
#include "incpen/error.hpp"
#include "incpen/kernels.hpp"
#include "incpen/parallel.hpp"
#include "incpen/projection.hpp"
#include "incpen/rng.hpp"

namespace incpen {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(OptimumLocation loc) noexcept {
  return loc == OptimumLocation::inside ? "inside" : "outside";
}

OptimumLocation parse_location(std::string_view text) {
  if (text == "inside" || text == "in") return OptimumLocation::inside;
  if (text == "outside" || text == "out") return OptimumLocation::outside;
  throw InvalidArgument("unknown optimum location '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// generator

void GeneratorSpec::validate() const {
  if (n < 1 || m < 1) throw InvalidArgument("generator: n and m must be >= 1");
  if (!(constraint_scale > 0.0) || !std::isfinite(constraint_scale))
    throw InvalidArgument("generator: constraint_scale must be positive");
  if (objective_kind == ObjectiveKind::custom)
    throw InvalidArgument("generator: objective must be quadratic_shift or l1_shift");
  if (reference_iters < 1) throw InvalidArgument("generator: reference_iters must be >= 1");
}

std::string GeneratorSpec::label() const {
  std::ostringstream os;
  os << (objective_kind == ObjectiveKind::quadratic_shift ? "q" : "l1") << '-'
     << (location == OptimumLocation::inside ? "in" : "out") << "-n" << n << "-m" << m;
  return os.str();
}

std::string GeneratorSpec::id() const { return label() + "-s" + std::to_string(seed); }

namespace {

constexpr int kRedrawBudget = 100;

Vector draw_normals(CounterRng& rng, std::size_t count, double scale) {
  Vector v(count);
  for (auto& e : v) e = scale * rng.normal();
  return v;
}

// Right-hand sides from the scalar kernel so generated files do not depend on
// the instruction set.
Vector slack_rhs(const Vector& rows, std::size_t m, std::size_t n, const Vector& point, CounterRng& rng) {
  const auto& k = kernels::scalar_table();
  Vector b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = k.dot(rows.data() + i * n, point.data(), n) + std::abs(rng.normal());
  return b;
}

ConstraintSystem build_system(const Vector& rows, const Vector& b, std::size_t m, std::size_t n) {
  std::vector<HalfspaceConstraint> cs;
  cs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    cs.emplace_back(Vector(rows.begin() + static_cast<std::ptrdiff_t>(i * n),
                           rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)),
                    b[i]);
  return ConstraintSystem(std::move(cs));
}

Objective make_objective(ObjectiveKind kind, Vector x0) {
  return kind == ObjectiveKind::quadratic_shift ? Objective::quadratic_shift(std::move(x0))
                                                : Objective::l1_shift(std::move(x0));
}

}  // namespace

ProblemInstance generate(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n, m = spec.m;
  CounterRng rng(spec.seed);
  const Vector rows = draw_normals(rng, m * n, spec.constraint_scale);
  const Vector x0 = draw_normals(rng, n, 1.0);

  if (spec.location == OptimumLocation::inside) {
    const Vector b = slack_rhs(rows, m, n, x0, rng);
    return ProblemInstance(make_objective(spec.objective_kind, x0), build_system(rows, b, m, n), x0,
                           KnownOptimum{x0, Provenance::exact}, spec.id(), spec.seed);
  }

  for (int attempt = 0; attempt < kRedrawBudget; ++attempt) {
    const Vector w = draw_normals(rng, n, 1.0);
    const Vector b = slack_rhs(rows, m, n, w, rng);
    ConstraintSystem sys = build_system(rows, b, m, n);
    if (max_violation(sys, x0) <= 0.0) continue;
    ProblemInstance inst(make_objective(spec.objective_kind, x0), std::move(sys), w, std::nullopt,
                         spec.id(), spec.seed);
    return inst.with_known_optimum(reference_solution(inst, spec.reference_iters));
  }
  throw InvalidArgument("generator: x0 stayed feasible after " + std::to_string(kRedrawBudget) +
                        " redraws for " + spec.id());
}

// ---------------------------------------------------------------------------
// schedules from config

ScheduleTriple ScheduleSpec::build(double objective_mu, std::size_t m) const {
  const double cg = c_gamma_per_constraint ? c_gamma * static_cast<double>(m) : c_gamma;
  switch (kind) {
    case ScheduleKind::polylog_convex:
      return ScheduleTriple::polylog_convex(c, g, d, cg);
    case ScheduleKind::strongly_convex:
      return ScheduleTriple::strongly_convex(mu.value_or(objective_mu), g, d, cg);
    case ScheduleKind::simulation_sc:
      return ScheduleTriple::simulation_sc(cg);
    case ScheduleKind::simulation_cvx:
      return ScheduleTriple::simulation_cvx(S, cg);
    case ScheduleKind::custom:
      break;
  }
  throw ConfigError("schedule kind 'custom' cannot be built from a config file");
}

// ---------------------------------------------------------------------------
// rate fits

RateFit fit_rate(const std::vector<std::size_t>& t, const std::vector<double>& values,
                 std::size_t t_min, std::size_t t_max, std::string quantity) {
  if (t.size() != values.size()) throw InvalidArgument("fit_rate: t and values differ in length");
  if (!(t_min < t_max)) throw InvalidArgument("fit_rate: window needs t_min < t_max");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_min || t[i] > t_max) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      std::ostringstream os;
      os << "fit_rate: nonpositive value " << values[i] << " at checkpoint t = " << t[i];
      throw InvalidArgument(os.str());
    }
    lx.push_back(std::log(static_cast<double>(t[i])));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 10)
    throw InvalidArgument("fit_rate: " + std::to_string(lx.size()) + " checkpoints in window, need >= 10");

  const double np = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / np;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / np;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.t_min = t_min;
  fit.t_max = t_max;
  fit.points = lx.size();
  fit.quantity = std::move(quantity);
  return fit;
}

const std::vector<std::string>& tracked_quantities() {
  static const std::vector<std::string> q{
      "rel_err_x", "rel_err_avg_s", "rel_err_avg_sinv", "fgap_x",  "fgap_avg_s",
      "fgap_avg_sinv", "dist_x",    "dist_avg_s",       "dist_avg_sinv"};
  return q;
}

std::string canonical_quantity(std::string_view name) {
  if (name == "dist_avg") return "dist_avg_s";
  for (const auto& q : tracked_quantities())
    if (q == name) return q;
  throw InvalidArgument("unknown quantity '" + std::string(name) + "'");
}

std::optional<double> quantity_value(const TraceRecord& r, std::string_view quantity,
                                     std::optional<double> f_star) {
  const std::string q = canonical_quantity(quantity);
  auto gap = [&](double f) -> std::optional<double> {
    if (!f_star) return std::nullopt;
    return std::abs(f - *f_star);
  };
  if (q == "rel_err_x") return r.rel_err_x;
  if (q == "rel_err_avg_s") return r.rel_err_avg_s;
  if (q == "rel_err_avg_sinv") return r.rel_err_avg_sinv;
  if (q == "fgap_x") return gap(r.f_x);
  if (q == "fgap_avg_s") return gap(r.f_avg_s);
  if (q == "fgap_avg_sinv") return gap(r.f_avg_sinv);
  if (q == "dist_x") return r.dist_x;
  if (q == "dist_avg_s") return r.dist_avg_s;
  return r.dist_avg_sinv;
}

RateFit fit_rate(const std::vector<TraceRecord>& trace, std::string_view quantity,
                 std::size_t t_min, std::size_t t_max, std::optional<double> f_star) {
  const std::string q = canonical_quantity(quantity);
  if (q.starts_with("fgap") && !f_star) throw InvalidArgument("fit_rate: " + q + " needs f*");
  std::vector<std::size_t> t;
  std::vector<double> v;
  for (const auto& r : trace) {
    if (r.k < t_min || r.k > t_max) continue;
    const auto val = quantity_value(r, q, f_star);
    if (!val) throw InvalidArgument("fit_rate: " + q + " missing at checkpoint t = " + std::to_string(r.k));
    t.push_back(r.k);
    v.push_back(*val);
  }
  return fit_rate(t, v, t_min, t_max, q);
}

std::pair<std::size_t, std::size_t> parse_window(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument("window must look like tmin:tmax");
  auto num = [&](std::string_view s) {
    const double v = parse_double(s);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e18) throw InvalidArgument("window bounds must be integers >= 1");
    return static_cast<std::size_t>(v);
  };
  const auto lo = num(text.substr(0, colon));
  const auto hi = num(text.substr(colon + 1));
  if (!(lo < hi)) throw InvalidArgument("window needs tmin < tmax");
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// config files

const ScheduleSpec& SuiteConfig::schedule_for(ObjectiveKind kind) const {
  const auto it = schedule_overrides.find(kind);
  return it == schedule_overrides.end() ? schedule : it->second;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    auto item = trim(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (item.empty()) throw ConfigError("empty item in list '" + text + "'");
    out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Section reader that rejects unknown keys and wraps conversion errors.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  void allow(std::initializer_list<const char*> keys) const {
    if (!tree_) return;
    for (const auto& [key, _] : *tree_) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw ConfigError("[" + name_ + "]: unknown key '" + key + "'");
    }
  }

  std::optional<std::string> raw(const char* key) const {
    if (!tree_) return std::nullopt;
    const auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <class T, class Parse>
  std::optional<T> get(const char* key, Parse parse) const {
    const auto text = raw(key);
    if (!text) return std::nullopt;
    try {
      return parse(*text);
    } catch (const Error& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  std::optional<double> real(const char* key) const {
    return get<double>(key, [](const std::string& s) { return parse_double(s); });
  }

  std::optional<std::uint64_t> count(const char* key) const {
    return get<std::uint64_t>(key, [](const std::string& s) { return to_count(s); });
  }

  std::optional<bool> flag(const char* key) const {
    return get<bool>(key, [](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      throw InvalidArgument("expected true or false, got '" + s + "'");
    });
  }

  template <class T, class Parse>
  std::optional<std::vector<T>> list(const char* key, Parse parse) const {
    return get<std::vector<T>>(key, [&](const std::string& s) {
      std::vector<T> out;
      for (const auto& item : split_list(s)) out.push_back(parse(item));
      return out;
    });
  }

  static std::uint64_t to_count(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidArgument("expected a nonnegative integer, got '" + s + "'");
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw InvalidArgument("integer out of range: '" + s + "'");
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

pt::ptree read_ini(std::istream& in) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return tree;
}

pt::ptree read_ini_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return read_ini(in);
}

Section section(const pt::ptree& tree, const char* name) {
  const auto child = tree.get_child_optional(name);
  return Section(name, child ? &*child : nullptr);
}

void allow_sections(const pt::ptree& tree, std::initializer_list<const char*> names) {
  for (const auto& [key, child] : tree) {
    if (child.empty() && !child.data().empty())
      throw ConfigError("config: key '" + key + "' outside any section");
    if (std::none_of(names.begin(), names.end(), [&](const char* n) { return key == n; }))
      throw ConfigError("config: unknown section [" + key + "]");
  }
}

ScheduleSpec read_schedule(const Section& s, ScheduleSpec base) {
  s.allow({"kind", "c", "g", "d", "mu", "S", "c_gamma", "c_gamma_per_constraint"});
  if (auto v = s.get<ScheduleKind>("kind", [](const std::string& t) { return parse_schedule_kind(t); }))
    base.kind = *v;
  if (auto v = s.real("c")) base.c = *v;
  if (auto v = s.real("g")) base.g = *v;
  if (auto v = s.real("d")) base.d = *v;
  if (auto v = s.real("mu")) base.mu = *v;
  if (auto v = s.real("S")) base.S = *v;
  if (auto v = s.real("c_gamma")) base.c_gamma = *v;
  if (auto v = s.flag("c_gamma_per_constraint")) base.c_gamma_per_constraint = *v;
  if (base.kind == ScheduleKind::custom) throw ConfigError("[schedule] kind 'custom' is not configurable");
  try {
    (void)base.build(2.0, 1);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[schedule]: ") + e.what());
  }
  return base;
}

ObjectiveKind parse_builtin_objective(const std::string& s) {
  const auto kind = parse_objective_kind(s);
  if (kind == ObjectiveKind::custom) throw InvalidArgument("objective must be quadratic_shift or l1_shift");
  return kind;
}

}  // namespace

SuiteConfig parse_suite_config(std::istream& in) {
  const pt::ptree tree = read_ini(in);
  allow_sections(tree, {"problem", "schedule", "schedule_quadratic_shift", "schedule_l1_shift", "run", "output"});
  SuiteConfig cfg;

  const Section problem = section(tree, "problem");
  problem.allow({"n", "m", "objective", "location", "constraint_scale", "seeds", "reference_iters"});
  const auto ns = problem.list<std::size_t>("n", Section::to_count).value_or(std::vector<std::size_t>{10});
  const auto ms = problem.list<std::size_t>("m", Section::to_count).value_or(std::vector<std::size_t>{100});
  const auto objs = problem.list<ObjectiveKind>("objective", parse_builtin_objective)
                        .value_or(std::vector<ObjectiveKind>{ObjectiveKind::quadratic_shift});
  const auto locs = problem.list<OptimumLocation>("location", [](const std::string& s) { return parse_location(s); })
                        .value_or(std::vector<OptimumLocation>{OptimumLocation::inside});
  const double scale = problem.real("constraint_scale").value_or(1.0);
  const std::size_t ref_iters = problem.count("reference_iters").value_or(GeneratorSpec{}.reference_iters);
  if (auto seeds = problem.list<std::uint64_t>("seeds", Section::to_count)) cfg.seeds = *seeds;

  for (auto obj : objs)
    for (auto loc : locs)
      for (auto m : ms)
        for (auto n : ns) {
          GeneratorSpec g{n, m, obj, loc, 0, scale, ref_iters};
          try {
            g.validate();
          } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("[problem]: ") + e.what());
          }
          cfg.specs.push_back(g);
        }

  cfg.schedule = read_schedule(section(tree, "schedule"), ScheduleSpec{});
  if (tree.get_child_optional("schedule_quadratic_shift"))
    cfg.schedule_overrides[ObjectiveKind::quadratic_shift] =
        read_schedule(section(tree, "schedule_quadratic_shift"), cfg.schedule);
  if (tree.get_child_optional("schedule_l1_shift"))
    cfg.schedule_overrides[ObjectiveKind::l1_shift] = read_schedule(section(tree, "schedule_l1_shift"), cfg.schedule);

  const Section run = section(tree, "run");
  run.allow({"iters", "repetitions", "seed", "trace_every", "assert", "init", "allow_invalid_schedule", "methods",
             "threads", "track_distances"});
  cfg.run.iters = run.count("iters").value_or(10000);
  if (cfg.run.iters < 1) throw ConfigError("[run] iters must be >= 1");
  cfg.repetitions = run.count("repetitions").value_or(1);
  if (cfg.repetitions < 1) throw ConfigError("[run] repetitions must be >= 1");
  cfg.run_seed = run.count("seed").value_or(0);
  cfg.run.trace_every = run.count("trace_every").value_or(0);
  if (auto a = run.get<AssertLevel>("assert", [](const std::string& s) { return parse_assert_level(s); }))
    cfg.run.assert_level = *a;
  if (auto i = run.get<InitKind>("init", [](const std::string& s) { return parse_init_kind(s); })) {
    if (*i == InitKind::explicit_point) throw ConfigError("[run] init must be zero or witness");
    cfg.run.init = *i;
  }
  cfg.run.allow_invalid_schedule = run.flag("allow_invalid_schedule").value_or(false);
  cfg.run.track_distances = run.flag("track_distances").value_or(true);
  if (auto ms2 = run.list<Method>("methods", [](const std::string& s) {
        if (s == "incremental") return Method::incremental;
        if (s == "full_gradient") return Method::full_gradient;
        throw InvalidArgument("unknown method '" + s + "'");
      }))
    cfg.methods = *ms2;
  cfg.threads = run.count("threads").value_or(0);

  const Section output = section(tree, "output");
  output.allow({"per_run_csv", "svg", "fit_window"});
  cfg.per_run_csv = output.flag("per_run_csv").value_or(true);
  cfg.svg = output.flag("svg").value_or(true);
  cfg.fit_window = output.get<std::pair<std::size_t, std::size_t>>("fit_window", [](const std::string& s) {
    return parse_window(s);
  });
  return cfg;
}

SuiteConfig load_suite_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_suite_config(in);
}

GeneratorSpec load_generator_spec(const fs::path& path) {
  const pt::ptree tree = read_ini_file(path);
  allow_sections(tree, {"problem"});
  const Section s = section(tree, "problem");
  s.allow({"n", "m", "objective", "location", "seed", "constraint_scale", "reference_iters"});
  GeneratorSpec g;
  g.n = s.count("n").value_or(g.n);
  g.m = s.count("m").value_or(g.m);
  g.objective_kind = s.get<ObjectiveKind>("objective", parse_builtin_objective).value_or(g.objective_kind);
  g.location = s.get<OptimumLocation>("location", [](const std::string& t) { return parse_location(t); })
                   .value_or(g.location);
  g.seed = s.count("seed").value_or(g.seed);
  g.constraint_scale = s.real("constraint_scale").value_or(g.constraint_scale);
  g.reference_iters = s.count("reference_iters").value_or(g.reference_iters);
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[problem]: ") + e.what());
  }
  return g;
}

ScheduleSpec load_schedule_spec(const fs::path& path) {
  const pt::ptree tree = read_ini_file(path);
  allow_sections(tree, {"schedule"});
  return read_schedule(section(tree, "schedule"), ScheduleSpec{});
}

// ---------------------------------------------------------------------------
// suites

std::size_t SuiteReport::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return !r.ok; }));
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t solver_seed(std::uint64_t run_seed, const GeneratorSpec& spec, std::uint64_t inst_seed, std::size_t rep) {
  return CounterRng::derive(CounterRng::derive(CounterRng::derive(run_seed, fnv1a(spec.label())), inst_seed), rep);
}

}  // namespace

SuiteReport run_suite(const SuiteConfig& cfg) {
  if (cfg.specs.empty() || cfg.seeds.empty() || cfg.repetitions == 0 || cfg.methods.empty())
    throw InvalidArgument("run_suite: empty grid");
  SuiteReport report;
  report.config = cfg;

  std::set<ObjectiveKind> kinds;
  for (const auto& s : cfg.specs) kinds.insert(s.objective_kind);
  for (auto kind : kinds) {
    const double mu = kind == ObjectiveKind::quadratic_shift ? 2.0 : 0.0;
    std::set<std::size_t> ms;
    for (const auto& s : cfg.specs)
      if (s.objective_kind == kind) ms.insert(s.m);
    for (auto m : ms) {
      try {
        const ScheduleTriple sch = cfg.schedule_for(kind).build(mu, m);
        report.verdicts.push_back({std::string(to_string(kind)) + " m=" + std::to_string(m), sch.describe(),
                                   validate_assumption(sch)});
      } catch (const InvalidArgument& e) {
        AssumptionReport bad;
        bad.conditions.push_back({"construction", false, e.what()});
        report.verdicts.push_back({std::string(to_string(kind)) + " m=" + std::to_string(m), "", bad});
      }
    }
  }

  // Instances are shared by repetitions and methods.
  struct Slot {
    std::optional<ProblemInstance> inst;
    std::string error;
  };
  const std::size_t n_inst = cfg.specs.size() * cfg.seeds.size();
  std::vector<Slot> instances(n_inst);
  parallel_for(n_inst, cfg.threads, [&](std::size_t idx) {
    GeneratorSpec spec = cfg.specs[idx / cfg.seeds.size()];
    spec.seed = cfg.seeds[idx % cfg.seeds.size()];
    try {
      instances[idx].inst.emplace(generate(spec));
    } catch (const Error& e) {
      instances[idx].error = std::string("generate: ") + e.what();
    }
  });

  const std::size_t per_inst = cfg.repetitions * cfg.methods.size();
  report.runs.resize(n_inst * per_inst);
  parallel_for(report.runs.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t inst_idx = idx / per_inst;
    const std::size_t rep = (idx % per_inst) / cfg.methods.size();
    const Method method = cfg.methods[idx % cfg.methods.size()];
    const GeneratorSpec& spec = cfg.specs[inst_idx / cfg.seeds.size()];
    RunResult& r = report.runs[idx];
    r.spec_index = inst_idx / cfg.seeds.size();
    r.instance_seed = cfg.seeds[inst_idx % cfg.seeds.size()];
    r.repetition = rep;
    r.method = method;
    r.solver_seed = solver_seed(cfg.run_seed, spec, r.instance_seed, rep);
    GeneratorSpec seeded = spec;
    seeded.seed = r.instance_seed;
    r.instance_id = seeded.id();
    const Slot& slot = instances[inst_idx];
    if (!slot.inst) {
      r.error = slot.error;
      return;
    }
    RunOptions opts = cfg.run;
    opts.seed = r.solver_seed;
    opts.method = method;
    try {
      const auto& f = slot.inst->objective();
      const ScheduleTriple sch = cfg.schedule_for(spec.objective_kind).build(f.mu(), spec.m);
      r.trace = run(*slot.inst, sch, opts);
      r.ok = true;
    } catch (const RunError& e) {
      r.error = e.what();
      r.trace = e.partial();
    } catch (const Error& e) {
      r.error = e.what();
    }
  });

  report.curves = aggregate(report.runs, cfg.specs);
  return report;
}

std::vector<AggregateCurve> aggregate(const std::vector<RunResult>& runs, const std::vector<GeneratorSpec>& specs) {
  std::map<std::pair<std::size_t, int>, std::vector<const RunResult*>> groups;
  for (const auto& r : runs)
    if (r.ok) groups[{r.spec_index, static_cast<int>(r.method)}].push_back(&r);

  std::vector<AggregateCurve> curves;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [](const RunResult* a, const RunResult* b) {
      return std::tie(a->instance_seed, a->repetition) < std::tie(b->instance_seed, b->repetition);
    });
    AggregateCurve c;
    c.spec_index = key.first;
    c.method = static_cast<Method>(key.second);
    c.label = key.first < specs.size() ? specs[key.first].label() : "spec" + std::to_string(key.first);
    if (c.method == Method::full_gradient) c.label += "-full";
    c.runs = members.size();

    std::set<std::size_t> ks;
    for (const auto* r : members)
      for (const auto& rec : r->trace.records) ks.insert(rec.k);
    c.k.assign(ks.begin(), ks.end());
    std::map<std::size_t, std::size_t> pos;
    for (std::size_t i = 0; i < c.k.size(); ++i) pos[c.k[i]] = i;

    for (const auto& q : tracked_quantities()) {
      std::vector<double> sum(c.k.size(), 0.0);
      std::vector<std::size_t> cnt(c.k.size(), 0);
      for (const auto* r : members)
        for (const auto& rec : r->trace.records)
          if (auto v = quantity_value(rec, q, r->trace.f_star)) {
            sum[pos[rec.k]] += *v;
            ++cnt[pos[rec.k]];
          }
      auto& out = c.values[q];
      out.resize(c.k.size());
      for (std::size_t i = 0; i < c.k.size(); ++i)
        if (cnt[i] > 0) out[i] = sum[i] / static_cast<double>(cnt[i]);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

std::vector<double> AggregateCurve::series(const std::string& quantity, std::vector<std::size_t>& t_out) const {
  const auto it = values.find(canonical_quantity(quantity));
  std::vector<double> out;
  t_out.clear();
  if (it == values.end()) return out;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (it->second[i]) {
      t_out.push_back(k[i]);
      out.push_back(*it->second[i]);
    }
  return out;
}

// ---------------------------------------------------------------------------
// report files

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateCurve>& curves) {
  out << "label,method,runs,k";
  for (const auto& q : tracked_quantities()) out << ',' << q;
  out << '\n';
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      out << c.label << ',' << to_string(c.method) << ',' << c.runs << ',' << c.k[i];
      for (const auto& q : tracked_quantities()) out << ',' << csv_field(c.values.at(q)[i]);
      out << '\n';
    }
}

std::string render_svg(const std::vector<AggregateCurve>& curves, const std::string& quantity) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                             "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  constexpr double W = 720, H = 480, L = 70, R = 200, T = 30, B = 50;
  const std::string q = canonical_quantity(quantity);

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  std::vector<std::vector<std::pair<double, double>>> pts(curves.size());
  for (std::size_t c = 0; c < curves.size(); ++c) {
    std::vector<std::size_t> t;
    const auto v = curves[c].series(q, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) continue;
      const double lx = std::log10(static_cast<double>(t[i])), ly = std::log10(v[i]);
      pts[c].emplace_back(lx, ly);
      xmin = std::min(xmin, lx);
      xmax = std::max(xmax, lx);
      ymin = std::min(ymin, ly);
      ymax = std::max(ymax, ly);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  xmin = std::floor(xmin), xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin), ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << q
     << " (log-log)</text>\n";
  os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
  os << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int e = static_cast<int>(xmin); e <= static_cast<int>(xmax); ++e)
    os << "<text x=\"" << px(e) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e)
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">iteration k</text>\n";
  os << "</g>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    os << "<polyline class=\"series\" data-label=\"" << curves[c].label << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts[c].size(); ++i)
      os << (i ? " " : "") << px(pts[c][i].first) << ',' << py(pts[c][i].second);
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14.0 * static_cast<double>(c + 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << curves[c].label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

std::pair<std::size_t, std::size_t> default_window(const SuiteConfig& cfg) {
  if (cfg.fit_window) return *cfg.fit_window;
  const std::size_t hi = cfg.run.iters;
  return {std::max<std::size_t>(10, hi / 100), hi};
}

}  // namespace

std::string render_summary(const SuiteReport& report) {
  const SuiteConfig& cfg = report.config;
  std::ostringstream os;
  os << std::setprecision(6);
  os << "runs: " << report.runs.size() << " (failed " << report.failures() << ")\n";
  os << "iters: " << cfg.run.iters << ", repetitions: " << cfg.repetitions << ", run seed: " << cfg.run_seed << "\n\n";

  os << "schedules\n";
  for (const auto& v : report.verdicts) {
    os << "  " << v.label << ": " << (v.report.checkable ? (v.report.passed() ? "valid" : "INVALID") : "unchecked")
       << "\n";
    std::istringstream desc(v.description);
    for (std::string line; std::getline(desc, line);) os << "    " << line << '\n';
    std::istringstream sum(v.report.summary());
    for (std::string line; std::getline(sum, line);) os << "    " << line << '\n';
  }

  const auto [w_lo, w_hi] = default_window(cfg);
  os << "\ncurves (final values; slopes fitted on t in [" << w_lo << ", " << w_hi << "])\n";
  for (const auto& c : report.curves) {
    os << "  " << c.label << " (" << c.runs << " runs)\n";
    for (const auto& q : tracked_quantities()) {
      std::vector<std::size_t> t;
      const auto v = c.series(q, t);
      if (v.empty()) continue;
      os << "    " << std::left << std::setw(18) << q << std::right << " final " << v.back();
      try {
        const auto fit = fit_rate(t, v, w_lo, w_hi, q);
        os << "  slope " << fit.slope << "  r2 " << fit.r_squared;
      } catch (const InvalidArgument& e) {
        os << "  slope n/a (" << e.what() << ')';
      }
      os << '\n';
    }
  }
  if (report.failures() > 0) {
    os << "\nfailures\n";
    for (const auto& r : report.runs)
      if (!r.ok) os << "  " << r.instance_id << " rep " << r.repetition << " " << to_string(r.method) << ": " << r.error << '\n';
  }
  return os.str();
}

void emit_report(const SuiteReport& report, const fs::path& dir) {
  if (report.runs.empty()) throw InvalidArgument("emit_report: suite has no runs");
  auto open = [](const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    return out;
  };
  fs::create_directories(dir);
  {
    auto out = open(dir / "aggregate.csv");
    write_aggregate_csv(out, report.curves);
  }
  {
    auto out = open(dir / "summary.txt");
    out << render_summary(report);
  }
  if (report.config.per_run_csv) {
    fs::create_directories(dir / "runs");
    for (const auto& r : report.runs) {
      if (r.trace.records.empty()) continue;
      auto out = open(dir / "runs" /
                      (r.instance_id + "-r" + std::to_string(r.repetition) + "-" + std::string(to_string(r.method)) + ".csv"));
      write_trace_csv(out, r.trace);
    }
  }
  if (report.config.svg)
    for (const auto& q : tracked_quantities()) {
      auto out = open(dir / (q + ".svg"));
      out << render_svg(report.curves, q);
    }
}

}  // namespace incpen
