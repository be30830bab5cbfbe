#include "incpen/schedules.hpp"

#include <cmath>
#include <sstream>

#include "incpen/error.hpp"
#include "incpen/instance.hpp"

namespace incpen {

std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::polylog_convex:
      return "polylog_convex";
    case ScheduleKind::strongly_convex:
      return "strongly_convex";
    case ScheduleKind::simulation_sc:
      return "simulation_sc";
    case ScheduleKind::simulation_cvx:
      return "simulation_cvx";
    case ScheduleKind::custom:
      return "custom";
  }
  return "custom";
}

ScheduleKind parse_schedule_kind(std::string_view text) {
  for (auto k : {ScheduleKind::polylog_convex, ScheduleKind::strongly_convex,
                 ScheduleKind::simulation_sc, ScheduleKind::simulation_cvx, ScheduleKind::custom})
    if (text == to_string(k)) return k;
  throw InvalidArgument("unknown schedule kind '" + std::string(text) + "'");
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string("schedule: ") + what + " must be > 0");
}

void require_k(std::size_t k) {
  if (k == 0) throw InvalidArgument("schedule: k must be >= 1");
}

double lnk1(std::size_t k) { return std::log(static_cast<double>(k) + 1.0); }

}  // namespace

ScheduleTriple ScheduleTriple::polylog_convex(double c, double g, double d, double c_gamma) {
  require_positive(c, "c");
  require_positive(d, "d");
  if (!(g >= 0.0)) throw InvalidArgument("schedule: g must be >= 0");
  require_positive(c_gamma, "c_gamma");
  ScheduleTriple s;
  s.kind_ = ScheduleKind::polylog_convex;
  s.c_ = c;
  s.g_ = g;
  s.d_ = d;
  s.c_gamma_ = c_gamma;
  return s;
}

ScheduleTriple ScheduleTriple::strongly_convex(double mu, double g, double d, double c_gamma) {
  require_positive(mu, "mu");
  require_positive(d, "d");
  if (!(g >= 0.0)) throw InvalidArgument("schedule: g must be >= 0");
  require_positive(c_gamma, "c_gamma");
  ScheduleTriple s;
  s.kind_ = ScheduleKind::strongly_convex;
  s.c_ = 1.0;
  s.mu_ = mu;
  s.g_ = g;
  s.d_ = d;
  s.c_gamma_ = c_gamma;
  return s;
}

ScheduleTriple ScheduleTriple::simulation_sc(double c_gamma) {
  require_positive(c_gamma, "c_gamma");
  ScheduleTriple s;
  s.kind_ = ScheduleKind::simulation_sc;
  s.c_ = 0.99;
  s.g_ = 1.0;
  s.d_ = 2.0;
  s.c_gamma_ = c_gamma;
  return s;
}

ScheduleTriple ScheduleTriple::simulation_cvx(double S, double c_gamma) {
  require_positive(S, "S");
  require_positive(c_gamma, "c_gamma");
  ScheduleTriple s;
  s.kind_ = ScheduleKind::simulation_cvx;
  s.c_ = 0.5;
  s.g_ = 1.0;
  s.d_ = 2.0;
  s.S_ = S;
  s.c_gamma_ = c_gamma;
  return s;
}

ScheduleTriple ScheduleTriple::custom(Sequence s, Sequence gamma, Sequence delta) {
  if (!s || !gamma || !delta) throw InvalidArgument("schedule: custom sequences must be callable");
  ScheduleTriple t;
  t.kind_ = ScheduleKind::custom;
  t.custom_s_ = std::move(s);
  t.custom_gamma_ = std::move(gamma);
  t.custom_delta_ = std::move(delta);
  return t;
}

double ScheduleTriple::step(std::size_t k) const {
  require_k(k);
  const double kk = static_cast<double>(k);
  switch (kind_) {
    case ScheduleKind::polylog_convex:
      return 1.0 / (std::pow(kk, c_) * std::pow(lnk1(k), (1.0 + 3.0 * g_) / 2.0));
    case ScheduleKind::strongly_convex:
      return 2.0 / (mu_ * kk);
    case ScheduleKind::simulation_sc:
      return 1.0 / std::pow(kk, 0.99);
    case ScheduleKind::simulation_cvx:
      return S_ / std::sqrt(kk);
    case ScheduleKind::custom:
      return custom_s_(k);
  }
  return 0.0;
}

double ScheduleTriple::gamma(std::size_t k) const {
  require_k(k);
  switch (kind_) {
    case ScheduleKind::polylog_convex:
    case ScheduleKind::strongly_convex:
      return c_gamma_ * std::pow(lnk1(k), g_);
    case ScheduleKind::simulation_sc:
    case ScheduleKind::simulation_cvx:
      return c_gamma_ * lnk1(k);
    case ScheduleKind::custom:
      return custom_gamma_(k);
  }
  return 0.0;
}

double ScheduleTriple::delta(std::size_t k) const {
  require_k(k);
  const double kk = static_cast<double>(k);
  switch (kind_) {
    case ScheduleKind::polylog_convex:
    case ScheduleKind::strongly_convex:
      return 1.0 / std::pow(kk, d_);
    case ScheduleKind::simulation_sc:
    case ScheduleKind::simulation_cvx:
      return 1.0 / (kk * kk);
    case ScheduleKind::custom:
      return custom_delta_(k);
  }
  return 0.0;
}

std::string ScheduleTriple::describe() const {
  std::ostringstream os;
  os << "kind = " << to_string(kind_) << '\n';
  switch (kind_) {
    case ScheduleKind::polylog_convex:
      os << "c = " << format_double(c_) << "\ng = " << format_double(g_) << "\nd = " << format_double(d_) << '\n';
      break;
    case ScheduleKind::strongly_convex:
      os << "mu = " << format_double(mu_) << "\ng = " << format_double(g_) << "\nd = " << format_double(d_) << '\n';
      break;
    case ScheduleKind::simulation_cvx:
      os << "S = " << format_double(S_) << '\n';
      break;
    default:
      break;
  }
  if (kind_ != ScheduleKind::custom) os << "c_gamma = " << format_double(c_gamma_) << '\n';
  return os.str();
}

bool AssumptionReport::passed() const {
  if (!checkable) return false;
  for (const auto& c : conditions)
    if (!c.passed) return false;
  return true;
}

std::string AssumptionReport::summary() const {
  if (!checkable) return "not statically checkable";
  std::string s;
  for (const auto& c : conditions) {
    if (!s.empty()) s += "; ";
    s += c.name + (c.passed ? ": pass" : ": FAIL") + " (" + c.detail + ")";
  }
  return s;
}

namespace {

// A sequence behaving like k^{-kexp} ln^{-lexp}(k+1) up to a constant factor.
struct Order {
  double kexp;
  double lexp;
};

constexpr double kExpTol = 1e-12;

bool series_converges(Order o) {
  if (o.kexp > 1.0 + kExpTol) return true;
  if (o.kexp < 1.0 - kExpTol) return false;
  return o.lexp > 1.0 + kExpTol;
}

Order times(Order a, Order b) { return {a.kexp + b.kexp, a.lexp + b.lexp}; }

std::string order_text(Order o) {
  std::ostringstream os;
  os << "k-exponent " << o.kexp << ", log-exponent " << o.lexp;
  return os.str();
}

}  // namespace

AssumptionReport validate_assumption(const ScheduleTriple& sch) {
  AssumptionReport rep;
  Order s{}, gam{}, del{};
  switch (sch.kind()) {
    case ScheduleKind::polylog_convex:
      s = {sch.c(), (1.0 + 3.0 * sch.g()) / 2.0};
      gam = {0.0, -sch.g()};
      del = {sch.d(), 0.0};
      break;
    case ScheduleKind::strongly_convex:
      s = {1.0, 0.0};
      gam = {0.0, -sch.g()};
      del = {sch.d(), 0.0};
      break;
    case ScheduleKind::simulation_sc:
      s = {0.99, 0.0};
      gam = {0.0, -1.0};
      del = {2.0, 0.0};
      break;
    case ScheduleKind::simulation_cvx:
      s = {0.5, 0.0};
      gam = {0.0, -1.0};
      del = {2.0, 0.0};
      break;
    case ScheduleKind::custom:
      rep.checkable = false;
      return rep;
  }

  const bool gamma_grows = gam.kexp < -kExpTol || (std::abs(gam.kexp) <= kExpTol && gam.lexp < -kExpTol);
  rep.conditions.push_back({"gamma_k -> inf", gamma_grows, "gamma " + order_text(gam)});
  rep.conditions.push_back({"sum s_k = inf", !series_converges(s), "s " + order_text(s)});
  const Order sgd = times(times(s, gam), del);
  rep.conditions.push_back({"sum s_k gamma_k delta_k < inf", series_converges(sgd), "s*gamma*delta " + order_text(sgd)});
  const Order ssgg = times(times(s, s), times(gam, gam));
  rep.conditions.push_back({"sum s_k^2 gamma_k^2 < inf", series_converges(ssgg), "s^2*gamma^2 " + order_text(ssgg)});

  if (sch.kind() == ScheduleKind::polylog_convex) {
    const double c = sch.c(), d = sch.d(), g = sch.g();
    const bool in_region = c >= 0.5 - kExpTol && c < 1.0 - kExpTol && d > 0.5 + kExpTol && g > kExpTol;
    std::ostringstream os;
    os << "c = " << c << ", d = " << d << ", g = " << g;
    rep.conditions.push_back({"c in [1/2,1), d > 1/2, g > 0", in_region, os.str()});
  }
  if (sch.kind() == ScheduleKind::strongly_convex) {
    const bool in_region = sch.d() > 1.0 + kExpTol && sch.g() > kExpTol;
    std::ostringstream os;
    os << "d = " << sch.d() << ", g = " << sch.g();
    rep.conditions.push_back({"d > 1, g > 0", in_region, os.str()});
  }
  return rep;
}

PartialSums partial_sums(const ScheduleTriple& sch, std::size_t t) {
  if (t < 1) throw InvalidArgument("partial_sums: t must be >= 1");
  PartialSums ps;
  for (std::size_t k = 1; k <= t; ++k) {
    const double s = sch.step(k);
    const double g = sch.gamma(k);
    ps.S += s;
    ps.Sbar += 1.0 / s;
    ps.sum_ssq_gsq += s * s * g * g;
    ps.sum_sgd += s * g * sch.delta(k);
  }
  return ps;
}

double polylog_step_sum_lower_bound(double c, double g, std::size_t t) {
  const double tt = static_cast<double>(t) + 1.0;
  return (std::pow(tt, 1.0 - c) - 1.0) / ((1.0 - c) * std::pow(std::log(tt), (1.0 + 3.0 * g) / 2.0));
}

double polylog_ssq_gsq_cap(double g) {
  if (!(g > 0.0)) throw InvalidArgument("polylog_ssq_gsq_cap: g must be > 0");
  const double l2 = std::log(2.0);
  return 1.0 / std::pow(l2, 1.0 + g) + 1.0 / (g * std::pow(l2, g));
}

}  // namespace incpen
