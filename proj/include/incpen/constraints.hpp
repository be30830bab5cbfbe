#pragma once

// Linear inequality constraints <a_i, x> - b_i <= 0 and the systems they form.

#include <cstddef>
#include <span>
#include <vector>

#include "incpen/types.hpp"

namespace incpen {

// One halfspace {x : <a, x> <= b}. The norm of `a` is computed once and
// reused by every formula that needs it.
class HalfspaceConstraint {
 public:
  HalfspaceConstraint(Vector a, double b);

  ConstSpan a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double norm_a() const noexcept { return norm_a_; }
  std::size_t dim() const noexcept { return a_.size(); }

  // <a, x> - b; positive means violated.
  double residual(ConstSpan x) const;

 private:
  Vector a_;
  double b_;
  double norm_a_;
};

// Ordered, nonempty collection of halfspaces of a common dimension. Rows are
// also kept packed row-major so residuals for all m constraints come from a
// single batched kernel call.
class ConstraintSystem {
 public:
  explicit ConstraintSystem(std::vector<HalfspaceConstraint> constraints);

  std::size_t size() const noexcept { return constraints_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double alpha_min() const noexcept { return alpha_min_; }

  const HalfspaceConstraint& operator[](std::size_t i) const { return constraints_[i]; }
  std::span<const HalfspaceConstraint> constraints() const noexcept { return constraints_; }

  ConstSpan row(std::size_t i) const noexcept { return {rows_.data() + i * dim_, dim_}; }
  ConstSpan rhs() const noexcept { return rhs_; }
  ConstSpan norms() const noexcept { return norms_; }

  // out[i] = <a_i, x> - b_i.
  void residuals(ConstSpan x, MutSpan out) const;
  Vector residuals(ConstSpan x) const;

  // Returns a copy with `extra` appended.
  ConstraintSystem with(const HalfspaceConstraint& extra) const;

 private:
  std::vector<HalfspaceConstraint> constraints_;
  std::size_t dim_ = 0;
  double alpha_min_ = 0.0;
  Vector rows_;
  Vector rhs_;
  Vector norms_;
};

// max_i (<a_i, x> - b_i); x lies in X iff the result is <= 0.
double max_violation(const ConstraintSystem& sys, ConstSpan x);

void require_dim(std::size_t expected, std::size_t got, const char* what);

}  // namespace incpen
