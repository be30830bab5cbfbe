#include "incpen/huber.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "incpen/error.hpp"
#include "incpen/kernels.hpp"

namespace incpen {

void PenaltyParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("penalty: gamma must be > 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("penalty: delta must be >= 0");
}

namespace {

void require_nonneg_delta(double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("penalty: delta must be >= 0");
}

void require_pos_delta(double delta) {
  if (!(delta > 0.0))
    throw InvalidArgument("penalty gradient: delta must be > 0 (got " + std::to_string(delta) + ")");
}

// Unchecked forms for the hot loops.
inline double p_raw(double s, double delta) {
  if (s > delta) return s;
  if (s < -delta) return 0.0;
  if (delta == 0.0) return 0.0;  // s == 0 here
  const double t = s + delta;
  return t * t / (4.0 * delta);
}

inline double dp_raw(double s, double delta) {
  if (s > delta) return 1.0;
  if (s < -delta) return 0.0;
  return (s + delta) / (2.0 * delta);
}

}  // namespace

double p_delta(double s, double delta) {
  require_nonneg_delta(delta);
  return p_raw(s, delta);
}

double p_delta_prime(double s, double delta) {
  require_pos_delta(delta);
  return dp_raw(s, delta);
}

double h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta) {
  require_nonneg_delta(delta);
  return p_raw(c.residual(x), delta) / c.norm_a();
}

double add_grad_h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta, double scale,
                        MutSpan out) {
  require_pos_delta(delta);
  require_dim(c.dim(), out.size(), "penalty gradient output");
  const double dp = dp_raw(c.residual(x), delta);
  if (dp != 0.0) kernels::axpy(scale * dp / c.norm_a(), c.a(), out);
  return dp;
}

Vector grad_h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta) {
  Vector g(c.dim(), 0.0);
  add_grad_h_delta(x, c, delta, 1.0, g);
  return g;
}

double avg_penalty_H(ConstSpan x, const ConstraintSystem& sys, double delta) {
  require_nonneg_delta(delta);
  const Vector r = sys.residuals(x);
  const ConstSpan norms = sys.norms();
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += p_raw(r[i], delta) / norms[i];
  return sum / static_cast<double>(sys.size());
}

void add_avg_penalty_grad(ConstSpan x, const ConstraintSystem& sys, double delta, double scale,
                          MutSpan out) {
  require_pos_delta(delta);
  require_dim(sys.dim(), out.size(), "penalty gradient output");
  const Vector r = sys.residuals(x);
  const ConstSpan norms = sys.norms();
  const double w = scale / static_cast<double>(sys.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double dp = dp_raw(r[i], delta);
    if (dp != 0.0) kernels::axpy(w * dp / norms[i], sys.row(i), out);
  }
}

double penalized_value_F(ConstSpan x, const Objective& f, const ConstraintSystem& sys,
                         const PenaltyParams& p) {
  p.validate();
  return f.value(x) + p.gamma * avg_penalty_H(x, sys, p.delta);
}

double grad_penalty_gap(ConstSpan x, const HalfspaceConstraint& c, double d1, double d2) {
  require_pos_delta(d2);
  if (d1 < d2) throw InvalidArgument("grad_penalty_gap: requires d1 >= d2");
  const double s = c.residual(x);
  // Both gradients are multiples of a / ||a||, so the gap is a scalar difference.
  return std::abs(dp_raw(s, d1) - dp_raw(s, d2));
}

}  // namespace incpen
