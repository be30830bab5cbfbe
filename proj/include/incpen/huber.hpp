#pragma once

// One-sided Huber penalty for a halfspace <a, x> <= b.
//
//            | s                     s > delta
//   p(s) =   | (s + delta)^2/(4delta) -delta <= s <= delta
//            | 0                     s < -delta
//
//   h(x) = p(<a, x> - b) / ||a||,   grad h(x) = p'(<a, x> - b) a / ||a||
//
// delta = 0 is allowed for values (h reduces to the distance to the
// halfspace) but not for gradients, which only exist for delta > 0. At
// s = +-delta the quadratic branch is used.

#include <cstddef>

#include "incpen/constraints.hpp"
#include "incpen/objective.hpp"

namespace incpen {

struct PenaltyParams {
  double gamma;
  double delta;

  // Throws unless gamma > 0 and delta >= 0.
  void validate() const;
};

double p_delta(double s, double delta);
double p_delta_prime(double s, double delta);

double h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta);
Vector grad_h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta);

// out += scale * grad h_delta(x; c). Returns p'(s).
double add_grad_h_delta(ConstSpan x, const HalfspaceConstraint& c, double delta, double scale,
                        MutSpan out);

// Mean of h_delta over all constraints.
double avg_penalty_H(ConstSpan x, const ConstraintSystem& sys, double delta);

// out += scale * grad H_delta(x); uses the batched residual kernel.
void add_avg_penalty_grad(ConstSpan x, const ConstraintSystem& sys, double delta, double scale,
                          MutSpan out);

// f(x) + gamma * H_delta(x).
double penalized_value_F(ConstSpan x, const Objective& f, const ConstraintSystem& sys,
                         const PenaltyParams& p);

// ||grad h_{d1}(x) - grad h_{d2}(x)|| for d1 >= d2 > 0; never exceeds
// (d1 - d2) / (2 d1).
double grad_penalty_gap(ConstSpan x, const HalfspaceConstraint& c, double d1, double d2);

}  // namespace incpen
