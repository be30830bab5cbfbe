#include "incpen/objective.hpp"

#include <cmath>
#include <string>

#include "incpen/constraints.hpp"
#include "incpen/error.hpp"
#include "incpen/kernels.hpp"
#include "incpen/rng.hpp"

namespace incpen {

std::string_view to_string(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::quadratic_shift:
      return "quadratic_shift";
    case ObjectiveKind::l1_shift:
      return "l1_shift";
    case ObjectiveKind::custom:
      return "custom";
  }
  return "custom";
}

ObjectiveKind parse_objective_kind(std::string_view text) {
  if (text == "quadratic_shift" || text == "quadratic") return ObjectiveKind::quadratic_shift;
  if (text == "l1_shift" || text == "l1") return ObjectiveKind::l1_shift;
  if (text == "custom") return ObjectiveKind::custom;
  throw InvalidArgument("unknown objective kind '" + std::string(text) + "'");
}

Objective Objective::quadratic_shift(Vector x0) {
  if (x0.empty()) throw InvalidArgument("quadratic_shift: empty shift point");
  Objective f;
  f.kind_ = ObjectiveKind::quadratic_shift;
  f.dim_ = x0.size();
  f.mu_ = 2.0;
  f.smooth_ = true;
  f.x0_ = std::move(x0);
  return f;
}

Objective Objective::l1_shift(Vector x0) {
  if (x0.empty()) throw InvalidArgument("l1_shift: empty shift point");
  Objective f;
  f.kind_ = ObjectiveKind::l1_shift;
  f.dim_ = x0.size();
  f.mu_ = 0.0;
  f.smooth_ = false;
  f.x0_ = std::move(x0);
  return f;
}

Objective Objective::custom(std::size_t dim, double mu, bool smooth, ValueFn value,
                            SubgradientFn subgradient) {
  if (dim == 0) throw InvalidArgument("custom objective: zero dimension");
  if (!(mu >= 0.0)) throw InvalidArgument("custom objective: mu must be >= 0");
  if (!value || !subgradient) throw InvalidArgument("custom objective: missing oracle");
  Objective f;
  f.kind_ = ObjectiveKind::custom;
  f.dim_ = dim;
  f.mu_ = mu;
  f.smooth_ = smooth;
  f.value_fn_ = std::move(value);
  f.subgradient_fn_ = std::move(subgradient);
  return f;
}

double Objective::value(ConstSpan x) const {
  require_dim(dim_, x.size(), "objective value");
  switch (kind_) {
    case ObjectiveKind::quadratic_shift:
      return kernels::sqdist(x, x0_);
    case ObjectiveKind::l1_shift: {
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) s += std::abs(x[j] - x0_[j]);
      return s;
    }
    case ObjectiveKind::custom:
      return value_fn_(x);
  }
  return 0.0;
}

void Objective::subgradient(ConstSpan x, MutSpan out) const {
  require_dim(dim_, x.size(), "objective subgradient");
  require_dim(dim_, out.size(), "objective subgradient output");
  switch (kind_) {
    case ObjectiveKind::quadratic_shift:
      for (std::size_t j = 0; j < dim_; ++j) out[j] = 2.0 * (x[j] - x0_[j]);
      return;
    case ObjectiveKind::l1_shift:
      for (std::size_t j = 0; j < dim_; ++j) {
        const double d = x[j] - x0_[j];
        out[j] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      }
      return;
    case ObjectiveKind::custom:
      subgradient_fn_(x, out);
      return;
  }
}

Vector Objective::subgradient(ConstSpan x) const {
  Vector g(dim_);
  subgradient(x, g);
  return g;
}

bool strong_convexity_check(const Objective& f, int trials, std::uint64_t rng_seed) {
  if (trials < 1) throw InvalidArgument("strong_convexity_check: trials must be >= 1");
  CounterRng rng(rng_seed);
  const std::size_t n = f.dim();
  Vector center(n, 0.0);
  if (!f.x0().empty()) center.assign(f.x0().begin(), f.x0().end());
  Vector u(n), v(n), g(n);
  for (int t = 0; t < trials; ++t) {
    // Spread pairs over several length scales so both near and far pairs occur.
    const double scale = std::pow(10.0, -2.0 + 4.0 * rng.uniform01());
    for (std::size_t j = 0; j < n; ++j) {
      u[j] = center[j] + scale * rng.normal();
      v[j] = center[j] + scale * rng.normal();
    }
    const double fu = f.value(u);
    const double fv = f.value(v);
    f.subgradient(v, g);
    double lin = 0.0;
    for (std::size_t j = 0; j < n; ++j) lin += g[j] * (u[j] - v[j]);
    const double lhs = fv + lin + 0.5 * f.mu() * kernels::sqdist(u, v);
    if (lhs > fu + 1e-9 * (1.0 + std::abs(fu))) return false;
  }
  return true;
}

}  // namespace incpen
