#include "incpen/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "incpen/error.hpp"
#include "incpen/kernels.hpp"

namespace incpen {

void DykstraConfig::validate() const {
  if (max_sweeps < 1) throw InvalidArgument("dykstra: max_sweeps must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("dykstra: tol must be > 0");
}

DykstraConfig DykstraConfig::defaults_for(ConstSpan x, const ConstraintSystem& sys) {
  return {10 * sys.size() * sys.dim(), 1e-10 * (1.0 + kernels::norm(x))};
}

Vector project_halfspace(ConstSpan x, const HalfspaceConstraint& c) {
  Vector y(x.begin(), x.end());
  const double r = c.residual(x);
  if (r > 0.0) kernels::axpy(-r / (c.norm_a() * c.norm_a()), c.a(), y);
  return y;
}

namespace {

constexpr std::size_t kPolishEvery = 16;

// Projection onto {<a_i, z> = b_i : i in work}. Returned only when it solves
// the full problem (KKT): nonnegative multipliers and feasibility within tol.
std::optional<Vector> equality_projection(ConstSpan x, const ConstraintSystem& sys,
                                          const std::vector<std::size_t>& work, double tol) {
  const auto n = static_cast<Eigen::Index>(sys.dim());
  const auto k = static_cast<Eigen::Index>(work.size());
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
  Eigen::VectorXd zv = xv;
  if (k > 0) {
    if (k > n) return std::nullopt;
    Eigen::MatrixXd A(k, n);
    Eigen::VectorXd r(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto i = work[static_cast<std::size_t>(j)];
      A.row(j) = Eigen::Map<const Eigen::RowVectorXd>(sys.row(i).data(), n);
      r(j) = sys.rhs()[i];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A * A.transpose());
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    const Eigen::VectorXd lambda = ldlt.solve(A * xv - r);
    if (!lambda.allFinite() || lambda.minCoeff() < 0.0) return std::nullopt;
    zv -= A.transpose() * lambda;
  }
  Vector z(zv.data(), zv.data() + n);
  if (!(max_violation(sys, z) <= tol)) return std::nullopt;
  return z;
}

// Nonnegative least squares min ||E u - f||, u >= 0 (Lawson-Hanson).
Eigen::VectorXd nnls(const Eigen::MatrixXd& E, const Eigen::VectorXd& f) {
  const Eigen::Index m = E.cols();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  const double eps = 1e-12 * (1.0 + E.cwiseAbs().maxCoeff());
  for (Eigen::Index outer = 0; outer < 3 * m + 10; ++outer) {
    const Eigen::VectorXd w = E.transpose() * (f - E * u);
    Eigen::Index t = -1;
    double best = eps;
    for (Eigen::Index j = 0; j < m; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) best = w(j), t = j;
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    while (true) {
      std::vector<Eigen::Index> cols;
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
      Eigen::MatrixXd Ep(E.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) Ep.col(static_cast<Eigen::Index>(c)) = E.col(cols[c]);
      const Eigen::VectorXd sp = Ep.colPivHouseholderQr().solve(f);
      Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
      for (std::size_t c = 0; c < cols.size(); ++c) s(cols[c]) = sp(static_cast<Eigen::Index>(c));
      double alpha = 1.0;
      bool feasible = true;
      for (Eigen::Index j : cols)
        if (s(j) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, u(j) / (u(j) - s(j)));
        }
      if (feasible) {
        u = s;
        break;
      }
      u += alpha * (s - u);
      for (Eigen::Index j : cols)
        if (u(j) <= eps) passive[static_cast<std::size_t>(j)] = false, u(j) = 0.0;
    }
  }
  return u;
}

// Exact projection by least-distance programming: min ||d|| s.t. -A d >= A x - b,
// solved through NNLS on [-A^T; (Ax - b)^T]. The positive dual components
// name the active constraints; the point itself comes from
// equality_projection so the KKT check applies.
std::optional<Vector> active_set_projection(ConstSpan x, const ConstraintSystem& sys, double tol) {
  const auto n = static_cast<Eigen::Index>(sys.dim());
  const auto m = static_cast<Eigen::Index>(sys.size());
  const Vector resid = sys.residuals(x);
  Eigen::MatrixXd E(n + 1, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    E.col(i).head(n) = -Eigen::Map<const Eigen::VectorXd>(sys.row(static_cast<std::size_t>(i)).data(), n);
    E(n, i) = resid[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n + 1);
  f(n) = 1.0;
  const Eigen::VectorXd u = nnls(E, f);
  std::vector<std::size_t> work;
  for (Eigen::Index i = 0; i < m; ++i)
    if (u(i) > 0.0) work.push_back(static_cast<std::size_t>(i));
  return equality_projection(x, sys, work, tol);
}

// Dykstra's current active set (positive multipliers) as a warm guess.
std::optional<Vector> polish(ConstSpan x, const ConstraintSystem& sys, const Vector& mult, double tol) {
  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < mult.size(); ++i)
    if (mult[i] > 0.0) work.push_back(i);
  return equality_projection(x, sys, work, tol);
}

}  // namespace

ProjectionResult project_intersection_detailed(ConstSpan x, const ConstraintSystem& sys,
                                               const DykstraConfig& cfg) {
  cfg.validate();
  require_dim(sys.dim(), x.size(), "project_intersection");
  const std::size_t m = sys.size();
  const std::size_t n = sys.dim();
  const ConstSpan rhs = sys.rhs();
  const ConstSpan norms = sys.norms();
  const auto& kt = kernels::active();

  Vector sq(m);
  for (std::size_t i = 0; i < m; ++i) sq[i] = norms[i] * norms[i];

  // Correction for halfspace i is mult[i] * a_i with mult[i] >= 0.
  Vector mult(m, 0.0);
  Vector y(x.begin(), x.end());
  Vector prev(n);
  Vector resid(m);

  bool tried_exact = false;
  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    prev = y;
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = sys.row(i).data();
      const double r = kt.dot(a, y.data(), n) - rhs[i];
      // Undo the old correction, project, record the new one.
      const double shifted = r + mult[i] * sq[i];
      const double next = shifted > 0.0 ? shifted / sq[i] : 0.0;
      const double change = mult[i] - next;
      if (change != 0.0) kt.axpy(change, a, y.data(), n);
      mult[i] = next;
    }
    const double disp = std::sqrt(kt.sqdist(y.data(), prev.data(), n));
    if (disp <= cfg.tol) {
      sys.residuals(y, resid);
      const double viol = *std::max_element(resid.begin(), resid.end());
      if (viol <= cfg.tol) return {std::move(y), sweep, disp};
    }
    if (sweep % kPolishEvery == 0 || disp <= cfg.tol) {
      if (auto z = polish(x, sys, mult, cfg.tol)) return {std::move(*z), sweep, disp};
    }
    // Stalled (no movement, still infeasible) or out of budget: finish exactly.
    if (((disp <= cfg.tol && !tried_exact) || sweep == cfg.max_sweeps) && sweep > 1) {
      tried_exact = true;
      if (auto z = active_set_projection(x, sys, cfg.tol)) return {std::move(*z), sweep, disp};
    }
    if (sweep == cfg.max_sweeps) {
      throw ConvergenceError("dykstra: no convergence after " + std::to_string(sweep) +
                                 " sweeps (last displacement " + std::to_string(disp) + ")",
                             y, disp);
    }
  }
  return {std::move(y), cfg.max_sweeps, 0.0};
}

Vector project_intersection(ConstSpan x, const ConstraintSystem& sys, const DykstraConfig& cfg) {
  return project_intersection_detailed(x, sys, cfg).point;
}

Vector project_intersection(ConstSpan x, const ConstraintSystem& sys) {
  return project_intersection(x, sys, DykstraConfig::defaults_for(x, sys));
}

double dist_to_feasible(ConstSpan x, const ConstraintSystem& sys, const DykstraConfig& cfg) {
  const Vector p = project_intersection(x, sys, cfg);
  return std::sqrt(kernels::sqdist(x, p));
}

double dist_to_feasible(ConstSpan x, const ConstraintSystem& sys) {
  return dist_to_feasible(x, sys, DykstraConfig::defaults_for(x, sys));
}

namespace {

// Semismooth Newton for f = ||x - x0||^2: F is piecewise quadratic with
// generalized Hessian 2I + (gamma / m) sum_{|s_i| <= delta} a_i a_i^T / (2 delta ||a_i||).
// Armijo backtracking on F; a full step is also taken when it halves ||grad F||,
// which covers the last steps where F changes below rounding. Stops at
// max(tol, the rounding level of grad F), which grows like gamma / delta.
PenalizedSolution newton_quadratic(const Objective& f, const ConstraintSystem& sys, const PenaltyParams& p,
                                   double tol, std::size_t max_iters, Vector x) {
  const std::size_t n = sys.dim();
  const std::size_t m = sys.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const double scale = p.gamma / static_cast<double>(m);
  auto objective = [&](ConstSpan z) { return f.value(z) + p.gamma * avg_penalty_H(z, sys, p.delta); };
  auto gradient = [&](ConstSpan z, MutSpan g) {
    f.subgradient(z, g);
    add_avg_penalty_grad(z, sys, p.delta, p.gamma, g);
  };

  Vector g(n), gt(n), trial(n), resid(m);
  Eigen::MatrixXd H(ni, ni);
  double fx = objective(x);
  for (std::size_t it = 0; it < max_iters; ++it) {
    gradient(x, g);
    const double gn = kernels::norm(g);
    sys.residuals(x, resid);
    const double xn = kernels::norm(x);
    double noise = 2.0 * (xn + kernels::norm(f.x0()));
    for (std::size_t i = 0; i < m; ++i) {
      const double s = resid[i];
      if (s > p.delta)
        noise += scale;
      else if (s >= -p.delta)
        noise += scale * (1.0 + (sys.norms()[i] * xn + std::abs(sys.rhs()[i])) / (2.0 * p.delta));
    }
    noise *= 16.0 * std::numeric_limits<double>::epsilon();
    if (gn <= std::max(tol, noise)) return {std::move(x), it, gn};

    H = 2.0 * Eigen::MatrixXd::Identity(ni, ni);
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(resid[i]) > p.delta) continue;
      const Eigen::Map<const Eigen::VectorXd> a(sys.row(i).data(), ni);
      H.selfadjointView<Eigen::Lower>().rankUpdate(a, scale / (2.0 * p.delta * sys.norms()[i]));
    }
    H.triangularView<Eigen::Upper>() = H.transpose();
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), ni);
    const Eigen::VectorXd d = H.llt().solve(-gv);
    const double slope = gv.dot(d);

    double t = 1.0, ft = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = x[j] + t * d(static_cast<Eigen::Index>(j));
      ft = objective(trial);
      if (ft <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      if (halving == 0) {
        gradient(trial, gt);
        if (kernels::norm(gt) <= 0.5 * gn) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted || !std::isfinite(ft))
      throw ConvergenceError("solve_penalized: line search failed (||grad F|| = " + std::to_string(gn) + ")", x, gn);
    x.swap(trial);
    fx = ft;
  }
  gradient(x, g);
  const double gn = kernels::norm(g);
  throw ConvergenceError("solve_penalized: iteration cap reached (||grad F|| = " + std::to_string(gn) + ")", x, gn);
}

}  // namespace

PenalizedSolution solve_penalized_detailed(const Objective& f, const ConstraintSystem& sys,
                                           const PenaltyParams& p, double tol,
                                           const PenalizedSolveOptions& opts) {
  p.validate();
  if (!(p.delta > 0.0)) throw InvalidArgument("solve_penalized: delta must be > 0");
  if (!(tol > 0.0)) throw InvalidArgument("solve_penalized: tol must be > 0");
  if (!f.smooth()) throw InvalidArgument("solve_penalized: objective is not differentiable");
  require_dim(sys.dim(), f.dim(), "solve_penalized");
  const std::size_t n = sys.dim();

  Vector x;
  if (opts.start) {
    require_dim(n, opts.start->size(), "solve_penalized start");
    x = *opts.start;
  } else if (!f.x0().empty()) {
    x.assign(f.x0().begin(), f.x0().end());
  } else {
    x.assign(n, 0.0);
  }

  double max_norm = 0.0;
  for (double v : sys.norms()) max_norm = std::max(max_norm, v);
  const double m = static_cast<double>(sys.size());
  const double lip_est = 2.0 + p.gamma / (2.0 * p.delta) * max_norm / m;
  // Rigorous bound for quadratic_shift: each h_i has gradient Lipschitz
  // constant ||a_i|| / (2 delta). Backtracking never goes below 1/lip_safe.
  const double lip_safe = std::max(lip_est, 2.0 * std::max(1.0, f.mu()) + p.gamma * max_norm / (2.0 * p.delta));

  auto objective = [&](ConstSpan z) { return f.value(z) + p.gamma * avg_penalty_H(z, sys, p.delta); };
  auto gradient = [&](ConstSpan z, MutSpan g) {
    f.subgradient(z, g);
    add_avg_penalty_grad(z, sys, p.delta, p.gamma, g);
  };

  Vector g(n), trial(n);
  if (f.kind() == ObjectiveKind::quadratic_shift) return newton_quadratic(f, sys, p, tol, opts.max_iters, std::move(x));

  double fx = objective(x);
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    gradient(x, g);
    const double gsq = kernels::sqnorm(g);
    if (std::sqrt(gsq) <= tol) return {std::move(x), it, std::sqrt(gsq)};
    double t = 1.0 / lip_est;
    double ft = 0.0;
    while (true) {
      trial = x;
      kernels::axpy(-t, g, trial);
      ft = objective(trial);
      if (ft <= fx - 1e-4 * t * gsq || t <= 1.0 / lip_safe) break;
      t *= 0.5;
    }
    x.swap(trial);
    fx = ft;
    if (!std::isfinite(fx)) throw ConvergenceError("solve_penalized: non-finite objective", x, NAN);
  }
  gradient(x, g);
  const double gn = kernels::norm(g);
  throw ConvergenceError("solve_penalized: iteration cap reached (||grad F|| = " +
                             std::to_string(gn) + ")",
                         x, gn);
}

Vector solve_penalized(const Objective& f, const ConstraintSystem& sys, const PenaltyParams& p,
                       double tol) {
  return solve_penalized_detailed(f, sys, p, tol).x;
}

KnownOptimum reference_solution(const ProblemInstance& inst, std::size_t iters) {
  const Objective& f = inst.objective();
  const ConstraintSystem& sys = inst.system();
  switch (f.kind()) {
    case ObjectiveKind::quadratic_shift:
      return {project_intersection(f.x0(), sys), Provenance::exact};
    case ObjectiveKind::l1_shift: {
      if (max_violation(sys, f.x0()) <= 0.0) return {Vector(f.x0().begin(), f.x0().end()), Provenance::exact};
      if (iters < 1) throw InvalidArgument("reference_solution: iters must be >= 1");
      Vector x(inst.witness().begin(), inst.witness().end());
      Vector best = x;
      double best_val = f.value(x);
      Vector g(x.size());
      for (std::size_t k = 1; k <= iters; ++k) {
        f.subgradient(x, g);
        kernels::axpy(-1.0 / std::sqrt(static_cast<double>(k)), g, x);
        x = project_intersection(x, sys);
        const double v = f.value(x);
        if (v < best_val) {
          best_val = v;
          best = x;
        }
      }
      return {std::move(best), Provenance::oracle_computed};
    }
    case ObjectiveKind::custom:
      break;
  }
  throw InvalidArgument("reference_solution: custom objectives are not supported");
}

}  // namespace incpen
