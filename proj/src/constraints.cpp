#include "incpen/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "incpen/error.hpp"
#include "incpen/kernels.hpp"

namespace incpen {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (expected " +
                          std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

HalfspaceConstraint::HalfspaceConstraint(Vector a, double b) : a_(std::move(a)), b_(b) {
  if (a_.empty()) throw InvalidArgument("halfspace: empty normal vector");
  if (!std::isfinite(b_) || !std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidArgument("halfspace: non-finite coefficient");
  norm_a_ = kernels::norm(a_);
  if (!(norm_a_ > 0.0)) throw InvalidArgument("halfspace: normal vector must be nonzero");
}

double HalfspaceConstraint::residual(ConstSpan x) const {
  require_dim(dim(), x.size(), "halfspace residual");
  return kernels::dot(a_, x) - b_;
}

ConstraintSystem::ConstraintSystem(std::vector<HalfspaceConstraint> constraints)
    : constraints_(std::move(constraints)) {
  if (constraints_.empty()) throw InvalidArgument("constraint system: no constraints");
  dim_ = constraints_.front().dim();
  alpha_min_ = std::numeric_limits<double>::infinity();
  rows_.reserve(constraints_.size() * dim_);
  rhs_.reserve(constraints_.size());
  norms_.reserve(constraints_.size());
  for (const auto& c : constraints_) {
    require_dim(dim_, c.dim(), "constraint system");
    rows_.insert(rows_.end(), c.a().begin(), c.a().end());
    rhs_.push_back(c.b());
    norms_.push_back(c.norm_a());
    alpha_min_ = std::min(alpha_min_, c.norm_a());
  }
}

void ConstraintSystem::residuals(ConstSpan x, MutSpan out) const {
  require_dim(dim_, x.size(), "residuals");
  require_dim(size(), out.size(), "residuals output");
  kernels::active().residuals(rows_.data(), rhs_.data(), x.data(), size(), dim_, out.data());
}

Vector ConstraintSystem::residuals(ConstSpan x) const {
  Vector out(size());
  residuals(x, out);
  return out;
}

ConstraintSystem ConstraintSystem::with(const HalfspaceConstraint& extra) const {
  auto cs = constraints_;
  cs.push_back(extra);
  return ConstraintSystem(std::move(cs));
}

double max_violation(const ConstraintSystem& sys, ConstSpan x) {
  const Vector r = sys.residuals(x);
  return *std::max_element(r.begin(), r.end());
}

}  // namespace incpen
