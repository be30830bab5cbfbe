#pragma once

// Euclidean projections onto halfspaces and their intersection, plus
// high-accuracy reference solvers for the penalized and original problems.

#include <cstddef>
#include <optional>

#include "incpen/constraints.hpp"
#include "incpen/huber.hpp"
#include "incpen/instance.hpp"

namespace incpen {

struct DykstraConfig {
  std::size_t max_sweeps = 0;
  double tol = 0.0;

  void validate() const;
  // tol = 1e-10 (1 + ||x||), max_sweeps = 10 m n.
  static DykstraConfig defaults_for(ConstSpan x, const ConstraintSystem& sys);
};

struct ProjectionResult {
  Vector point;
  std::size_t sweeps = 0;
  double last_displacement = 0.0;
};

Vector project_halfspace(ConstSpan x, const HalfspaceConstraint& c);

// Dykstra's alternating projections over the m halfspaces. Every correction
// term is a nonnegative multiple of its normal a_i, so only the m
// multipliers are stored. Stops once a full sweep moves the iterate by at
// most tol and the maximal violation is at most tol. Every 16 sweeps the
// constraints with positive multipliers are tried as the exact active set;
// a stalled or exhausted run finishes with an NNLS active-set solve. Either
// shortcut is accepted only if it passes the KKT check. Throws
// ConvergenceError (carrying the last iterate) after max_sweeps.
ProjectionResult project_intersection_detailed(ConstSpan x, const ConstraintSystem& sys,
                                               const DykstraConfig& cfg);
Vector project_intersection(ConstSpan x, const ConstraintSystem& sys, const DykstraConfig& cfg);
Vector project_intersection(ConstSpan x, const ConstraintSystem& sys);

double dist_to_feasible(ConstSpan x, const ConstraintSystem& sys, const DykstraConfig& cfg);
double dist_to_feasible(ConstSpan x, const ConstraintSystem& sys);

struct PenalizedSolveOptions {
  std::size_t max_iters = 2'000'000;
  std::optional<Vector> start;  // defaults to the objective's shift point, else 0
};

struct PenalizedSolution {
  Vector x;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

// Minimizes F = f + gamma * H_delta until ||grad F|| <= tol. quadratic_shift
// uses semismooth Newton steps (F is piecewise quadratic); other smooth
// objectives use gradient descent with Armijo backtracking. Requires a
// differentiable objective and delta > 0.
PenalizedSolution solve_penalized_detailed(const Objective& f, const ConstraintSystem& sys,
                                           const PenaltyParams& p, double tol,
                                           const PenalizedSolveOptions& opts = {});
Vector solve_penalized(const Objective& f, const ConstraintSystem& sys, const PenaltyParams& p,
                       double tol);

// Optimum of the original constrained problem. quadratic_shift: the
// projection of x0 onto X (tagged exact). l1_shift: x0 when it is feasible
// (exact), otherwise `iters` projected subgradient steps with stepsize
// 1/sqrt(k) from the witness, keeping the best objective value
// (oracle-computed).
KnownOptimum reference_solution(const ProblemInstance& inst, std::size_t iters);

}  // namespace incpen
