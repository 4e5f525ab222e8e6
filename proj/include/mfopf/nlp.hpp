#pragma once

#include "mfopf/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfopf {

/// First- (and optionally second-) order information of a smooth NLP
///
///   min f(x)  s.t.  c(x) = 0,  h(x) <= 0,  lb <= x <= ub
///
/// at one point. Jacobians are dense, rows follow constraint order.
struct NlpEvaluation {
  double objective = 0.0;
  Vector gradient;
  Vector equalities;
  Matrix equality_jacobian;
  Vector inequalities;
  Matrix inequality_jacobian;
};

/// Smooth nonlinear program. Implementations must be deterministic and pure.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual Index num_variables() const = 0;
  virtual Index num_equalities() const = 0;
  virtual Index num_inequalities() const = 0;

  /// Bounds may be +-infinity; lb == ub marks a fixed variable.
  virtual Vector lower_bounds() const = 0;
  virtual Vector upper_bounds() const = 0;
  virtual Vector starting_point() const = 0;

  virtual void evaluate(const Vector& x, NlpEvaluation& out) const = 0;

  virtual bool has_hessian() const { return false; }
  /// Hessian of  objective_factor * f + y_eq' c + y_ineq' h.
  virtual Matrix lagrangian_hessian(const Vector& x, double objective_factor, const Vector& y_eq,
                                    const Vector& y_ineq) const;

  NlpEvaluation evaluate(const Vector& x) const {
    NlpEvaluation e;
    evaluate(x, e);
    return e;
  }
};

enum class SolveStatus { Optimal, LocallyInfeasible, IterationLimit, NumericalError };

std::string to_string(SolveStatus status);

/// Exact falls back to damped BFGS for problems without a Hessian.
enum class HessianMode { Exact, DampedBfgs };

struct SolverOptions {
  double tol_kkt = 1e-8;
  int max_iter = 3000;
  double mu_init = 0.1;
  double mu_reduction = 0.1;      // mu <- mu * mu_reduction
  double barrier_tol_factor = 10.0;  // inner loop stops when E_mu <= factor * mu
  double fraction_to_boundary = 0.995;
  double bound_push = 1e-2;
  HessianMode hessian = HessianMode::Exact;
  bool record_barrier_history = true;
};

struct KktResiduals {
  double primal = 0.0;          // max(|c|, max(h, 0)), bound violation
  double stationarity = 0.0;    // scaled Lagrangian gradient
  double complementarity = 0.0; // scaled complementarity at mu = 0
  double max() const;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalError;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;
  double wall_time_s = 0.0;
  // Multipliers of the unscaled problem; y_ineq >= 0 and z >= 0 at optimum.
  Vector y_eq;
  Vector y_ineq;
  Vector z_lower;
  Vector z_upper;
  std::vector<double> barrier_history;
  std::string message;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Primal-dual interior point method with slack variables on inequalities,
/// monotone barrier reduction, fraction-to-the-boundary rule and
/// inertia-correcting regularization. `x0` overrides the problem's starting
/// point.
SolveResult solve(const NlpProblem& problem, const SolverOptions& options = {},
                  const std::optional<Vector>& x0 = std::nullopt);

/// Post-hoc first-order optimality check of a returned point and multipliers,
/// computed independently of the solver's internal termination test.
KktResiduals kkt_certificate(const NlpProblem& problem, const SolveResult& result);

struct DerivativeReport {
  double max_relative_deviation = 0.0;
  std::string worst_entry;  // e.g. "equality_jacobian(3, 7)"
};

/// Compares the problem's gradient, Jacobians and (when provided) Lagrangian
/// Hessian against central finite differences at x0, extrapolated over a
/// sequence of steps shrinking from `step` (relative to max(1, |x_j|)).
DerivativeReport check_derivatives(const NlpProblem& problem, const Vector& x0, double step = 1e-3);

struct MultistartReport {
  std::vector<SolveResult> runs;  // one per start, in input order
  std::optional<std::size_t> best;

  const SolveResult& best_result() const;
};

class AllStartsFailed : public std::runtime_error {
 public:
  explicit AllStartsFailed(MultistartReport report);
  const MultistartReport& report() const { return report_; }

 private:
  MultistartReport report_;
};

/// Solves from every start and keeps the lowest-objective Optimal run. Throws
/// AllStartsFailed when no start converges.
MultistartReport multistart(const NlpProblem& problem, const std::vector<Vector>& starts,
                            const SolverOptions& options = {});

}  // namespace mfopf
