#include "mfopf/nlp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace mfopf {

namespace {

struct Tracker {
  DerivativeReport report;

  void compare(double analytic, double fd, const std::string& what, Index row, Index col) {
    const double dev = std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
    if (dev > report.max_relative_deviation || report.worst_entry.empty()) {
      report.max_relative_deviation = dev;
      report.worst_entry = fmt::format("{}({}, {})", what, row, col);
    }
  }
};

// Derivatives of a vector function along one coordinate by Ridders'
// extrapolation of central differences over a shrinking step sequence. Each
// entry keeps the tableau value with the smallest error estimate.
Vector ridders(const std::function<Vector(double)>& central, double h0) {
  constexpr int kSteps = 32;
  constexpr double kShrink = 1.4;
  constexpr double kShrink2 = kShrink * kShrink;
  std::vector<std::vector<Vector>> a(kSteps, std::vector<Vector>(kSteps));
  double h = h0;
  a[0][0] = central(h);
  Vector best = a[0][0];
  Vector err = Vector::Constant(best.size(), std::numeric_limits<double>::infinity());
  for (int i = 1; i < kSteps; ++i) {
    h /= kShrink;
    a[0][i] = central(h);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const Vector e = (a[j][i] - a[j - 1][i]).cwiseAbs().cwiseMax((a[j][i] - a[j - 1][i - 1]).cwiseAbs());
      for (Index k = 0; k < e.size(); ++k)
        if (e[k] <= err[k]) {
          err[k] = e[k];
          best[k] = a[j][i][k];
        }
    }
  }
  return best;
}

}  // namespace

DerivativeReport check_derivatives(const NlpProblem& problem, const Vector& x0, double step) {
  const Index n = problem.num_variables();
  const NlpEvaluation base = problem.evaluate(x0);
  const Index me = base.equalities.size();
  const Index mi = base.inequalities.size();
  const bool hessian = problem.has_hessian();
  // Unit multipliers exercise every constraint Hessian.
  const Vector y_eq = Vector::Ones(me);
  const Vector y_ineq = Vector::Ones(mi);
  auto lagrangian_gradient = [&](const NlpEvaluation& e) {
    Vector g = e.gradient;
    if (me > 0) g += e.equality_jacobian.transpose() * y_eq;
    if (mi > 0) g += e.inequality_jacobian.transpose() * y_ineq;
    return g;
  };
  const Matrix h_analytic = hessian ? problem.lagrangian_hessian(x0, 1.0, y_eq, y_ineq) : Matrix();

  // Stacked outputs: objective, equalities, inequalities, Lagrangian gradient.
  const Index m = 1 + me + mi + (hessian ? n : 0);
  auto stack = [&](const NlpEvaluation& e) {
    Vector v(m);
    v[0] = e.objective;
    v.segment(1, me) = e.equalities;
    v.segment(1 + me, mi) = e.inequalities;
    if (hessian) v.tail(n) = lagrangian_gradient(e);
    return v;
  };

  Tracker t;
  for (Index j = 0; j < n; ++j) {
    const double scale = std::max(1.0, std::abs(x0[j]));
    const Vector d = ridders(
        [&](double h) {
          Vector xp = x0, xm = x0;
          xp[j] += h * scale;
          xm[j] -= h * scale;
          return Vector((stack(problem.evaluate(xp)) - stack(problem.evaluate(xm))) / (2.0 * h * scale));
        },
        step);

    t.compare(base.gradient[j], d[0], "gradient", j, 0);
    for (Index i = 0; i < me; ++i) t.compare(base.equality_jacobian(i, j), d[1 + i], "equality_jacobian", i, j);
    for (Index i = 0; i < mi; ++i)
      t.compare(base.inequality_jacobian(i, j), d[1 + me + i], "inequality_jacobian", i, j);
    if (hessian)
      for (Index i = 0; i < n; ++i) t.compare(h_analytic(i, j), d[1 + me + mi + i], "lagrangian_hessian", i, j);
  }
  return t.report;
}

}  // namespace mfopf
