#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

#include "incpen/types.hpp"

namespace incpen {

enum class ObjectiveKind { quadratic_shift, l1_shift, custom };

std::string_view to_string(ObjectiveKind kind) noexcept;
ObjectiveKind parse_objective_kind(std::string_view text);

// Convex objective with a value oracle and a subgradient oracle.
//
// Built-ins:
//   quadratic_shift  f(x) = ||x - x0||^2,  subgradient 2(x - x0),  mu = 2
//   l1_shift         f(x) = ||x - x0||_1,  sign(x - x0) with 0 at ties, mu = 0
//
// Custom objectives declare their strong-convexity modulus and whether they
// are differentiable. Both claims are trusted; the test suite verifies them
// with strong_convexity_check. Bounded level sets are a caller obligation.
class Objective {
 public:
  using ValueFn = std::function<double(ConstSpan)>;
  using SubgradientFn = std::function<void(ConstSpan, MutSpan)>;

  static Objective quadratic_shift(Vector x0);
  static Objective l1_shift(Vector x0);
  static Objective custom(std::size_t dim, double mu, bool smooth, ValueFn value,
                          SubgradientFn subgradient);

  ObjectiveKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double mu() const noexcept { return mu_; }
  bool smooth() const noexcept { return smooth_; }
  // Shift point of the built-ins; empty for custom objectives.
  ConstSpan x0() const noexcept { return x0_; }

  double value(ConstSpan x) const;
  void subgradient(ConstSpan x, MutSpan out) const;
  Vector subgradient(ConstSpan x) const;

 private:
  Objective() = default;

  ObjectiveKind kind_ = ObjectiveKind::custom;
  std::size_t dim_ = 0;
  double mu_ = 0.0;
  bool smooth_ = false;
  Vector x0_;
  ValueFn value_fn_;
  SubgradientFn subgradient_fn_;
};

inline double evaluate(const Objective& f, ConstSpan x) { return f.value(x); }
inline Vector subgradient(const Objective& f, ConstSpan x) { return f.subgradient(x); }

// Samples `trials` pairs (u, v) and checks
//   f(v) + <g(v), u - v> + (mu/2)||u - v||^2 <= f(u) + 1e-9 (1 + |f(u)|).
bool strong_convexity_check(const Objective& f, int trials, std::uint64_t rng_seed);

}  // namespace incpen
