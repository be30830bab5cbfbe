#pragma once

// Checks relating minimizers of the penalized problem
//   min f(x) + gamma * H_delta(x)
// to the feasible set and to the constrained optimum.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incpen/huber.hpp"
#include "incpen/instance.hpp"

namespace incpen {

// f(witness) + gamma * delta / (4 alpha_min): every penalized minimizer lies
// in the level set {f <= threshold}.
double level_threshold(const Objective& f, ConstSpan witness, const PenaltyParams& p,
                       double alpha_min);

struct PenalizedSolutionReport {
  PenaltyParams params{};
  bool solved = false;
  std::string error;          // oracle failure, when !solved
  Vector x_star_pen;
  double dist_X = 0.0;
  double f_value = 0.0;
  double f_gap_vs_true = 0.0; // f(x_pen) - f(x*)
  double level_threshold = 0.0;
  bool level_ok = false;      // f(x_pen) <= threshold + 1e-6
};

struct DeltaRatio {
  double gamma = 0.0;
  double delta_hi = 0.0;
  double delta_lo = 0.0;
  std::optional<double> ratio;  // dist(delta_hi) / dist(delta_lo); empty when both are ~0
  bool ok = true;
};

struct InfeasibilityScan {
  // gamma-major: reports[gi * deltas.size() + di].
  std::vector<PenalizedSolutionReport> reports;
  std::vector<double> gammas;
  std::vector<double> deltas;
  bool level_sets_ok = true;
  bool monotone_ok = true;    // dist nonincreasing when gamma grows and delta shrinks
  std::optional<double> ratio_gamma;  // gamma of the ratio ladder; empty if dist ~ 0 everywhere
  std::vector<DeltaRatio> ratios;     // halving pairs at ratio_gamma
  bool ratios_ok = true;
  std::size_t ratios_evaluated = 0;

  bool passed() const { return level_sets_ok && monotone_ok && ratios_ok; }
};

// Solves the penalized problem for every (gamma, delta) pair (solver
// tolerance `tol` on ||grad F||) and evaluates: level-set containment,
// monotone decrease of dist(x_pen, X) between pairs where gamma grows and
// delta shrinks, and dist ratios within [2/3, 6] for delta-halving pairs at
// the largest gamma whose solutions are not all feasible. Requires a
// differentiable objective.
InfeasibilityScan infeasibility_scan(const ProblemInstance& inst, std::span<const double> gammas,
                                     std::span<const double> deltas, double tol,
                                     std::size_t threads = 1);

struct GapEntry {
  PenaltyParams params{};
  bool in_regime = false;
  double gap_sq = 0.0;  // ||x* - x_pen||^2
  double bound = 0.0;   // gamma delta / (2 mu alpha_min)
  bool passed = false;  // skipped entries count as passed
  std::string note;
};

struct GapCheck {
  std::vector<GapEntry> entries;
  std::size_t evaluated = 0;
  bool all_passed = true;
};

// For strongly convex f with known optimum x*: asserts
// ||x* - x_pen||^2 <= gamma delta / (2 mu alpha_min) + tol on pairs in the
// sufficient-gamma regime. A pair is in regime when doubling gamma changes
// dist(x_pen, X) by less than 5%; other pairs are reported as skipped.
GapCheck strong_convexity_gap_check(const ProblemInstance& inst, std::span<const double> gammas,
                                    std::span<const double> deltas, double tol,
                                    std::size_t threads = 1);

}  // namespace incpen
