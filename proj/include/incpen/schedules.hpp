#pragma once

// Stepsize / penalty / smoothing sequences (s_k, gamma_k, delta_k), k >= 1.
//
//   kind             s_k                                 gamma_k               delta_k
//   polylog_convex   1/(k^c ln^{(1+3g)/2}(k+1))          c_gamma ln^g(k+1)     1/k^d
//   strongly_convex  2/(mu k)                            c_gamma ln^g(k+1)     1/k^d
//   simulation_sc    1/k^0.99                            c_gamma ln(k+1)       1/k^2
//   simulation_cvx   S/k^0.5                             c_gamma ln(k+1)       1/k^2
//   custom           user callbacks
//
// c_gamma defaults to 1. Logarithms are ln(k+1) throughout so gamma_1 > 0.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace incpen {

enum class ScheduleKind { polylog_convex, strongly_convex, simulation_sc, simulation_cvx, custom };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(std::string_view text);

class ScheduleTriple {
 public:
  using Sequence = std::function<double(std::size_t)>;

  static ScheduleTriple polylog_convex(double c, double g, double d, double c_gamma = 1.0);
  static ScheduleTriple strongly_convex(double mu, double g, double d, double c_gamma = 1.0);
  static ScheduleTriple simulation_sc(double c_gamma);
  static ScheduleTriple simulation_cvx(double S, double c_gamma);
  static ScheduleTriple custom(Sequence s, Sequence gamma, Sequence delta);

  ScheduleKind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  double g() const noexcept { return g_; }
  double d() const noexcept { return d_; }
  double mu() const noexcept { return mu_; }
  double S() const noexcept { return S_; }
  double c_gamma() const noexcept { return c_gamma_; }

  double step(std::size_t k) const;
  double gamma(std::size_t k) const;
  double delta(std::size_t k) const;

  // key = value lines for the [schedule] section.
  std::string describe() const;

 private:
  ScheduleTriple() = default;

  ScheduleKind kind_ = ScheduleKind::custom;
  double c_ = 0.0;
  double g_ = 0.0;
  double d_ = 0.0;
  double mu_ = 0.0;
  double S_ = 1.0;
  double c_gamma_ = 1.0;
  Sequence custom_s_, custom_gamma_, custom_delta_;
};

inline double step_s(const ScheduleTriple& sch, std::size_t k) { return sch.step(k); }
inline double penalty_gamma(const ScheduleTriple& sch, std::size_t k) { return sch.gamma(k); }
inline double smoothing_delta(const ScheduleTriple& sch, std::size_t k) { return sch.delta(k); }

struct ConditionResult {
  std::string name;
  bool passed = false;
  std::string detail;  // names the deciding exponents
};

struct AssumptionReport {
  bool checkable = true;
  std::vector<ConditionResult> conditions;

  bool passed() const;
  std::string summary() const;
};

// Symbolic check of the convergence conditions
//   gamma_k -> inf, sum s_k = inf, sum s_k gamma_k delta_k < inf, sum s_k^2 gamma_k^2 < inf
// from the exponents of each sequence (sum k^-a ln^-b(k+1) converges iff
// a > 1 or a = 1 and b > 1). For polylog_convex the verdict additionally
// requires the parameter region c in [1/2, 1), d > 1/2, g > 0 under which
// the partial-sum bounds hold.
AssumptionReport validate_assumption(const ScheduleTriple& sch);

struct PartialSums {
  double S = 0.0;             // sum s_k
  double Sbar = 0.0;          // sum 1/s_k
  double sum_ssq_gsq = 0.0;   // sum s_k^2 gamma_k^2
  double sum_sgd = 0.0;       // sum s_k gamma_k delta_k
};

PartialSums partial_sums(const ScheduleTriple& sch, std::size_t t);

// Lower bound ((t+1)^{1-c} - 1) / ((1-c) ln^{(1+3g)/2}(t+1)) on sum s_k for
// polylog_convex with c_gamma = 1.
double polylog_step_sum_lower_bound(double c, double g, std::size_t t);

// 1/ln^{1+g} 2 + 1/(g ln^g 2): the first term plus an integral bound on the
// tail, a cap on sum s_k^2 gamma_k^2 for polylog_convex with c >= 1/2,
// c_gamma = 1 and g > 0.
double polylog_ssq_gsq_cap(double g);

}  // namespace incpen
