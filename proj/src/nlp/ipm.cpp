#include "mfopf/nlp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace mfopf {

Matrix NlpProblem::lagrangian_hessian(const Vector&, double, const Vector&, const Vector&) const {
  throw ConfigError("problem does not provide a Lagrangian Hessian");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::LocallyInfeasible: return "LocallyInfeasible";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalError: return "NumericalError";
  }
  return "Unknown";
}

double KktResiduals::max() const { return std::max({primal, stationarity, complementarity}); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScaleMax = 100.0;  // IPOPT-style s_max for dual scaling

using IndexList = std::vector<Index>;

/// Factorization of the reduced symmetric KKT matrix. The matrix is
/// equilibrated (Ruiz) before the eigendecomposition, which gives the inertia
/// and a stable solve in one step.
class KktFactor {
 public:
  void compute(const Matrix& k) {
    const Index n = k.rows();
    scale_ = Vector::Ones(n);
    Matrix scaled = k;
    for (int pass = 0; pass < 6; ++pass) {
      Vector r(n);
      for (Index i = 0; i < n; ++i) r[i] = scaled.row(i).cwiseAbs().maxCoeff();
      for (Index i = 0; i < n; ++i) r[i] = r[i] > 0.0 ? 1.0 / std::sqrt(r[i]) : 1.0;
      scaled = r.asDiagonal() * scaled * r.asDiagonal();
      scale_ = scale_.cwiseProduct(r);
    }
    eig_.compute(scaled);
    const Vector& lambda = eig_.eigenvalues();
    const double big = lambda.cwiseAbs().maxCoeff();
    const double zero_tol = std::max(1e-300, big * 1e-14 * static_cast<double>(std::max<Index>(n, 1)));
    positive_ = negative_ = zero_ = 0;
    inv_ = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      if (std::abs(lambda[i]) <= zero_tol) {
        ++zero_;
      } else {
        inv_[i] = 1.0 / lambda[i];
        (lambda[i] > 0.0 ? positive_ : negative_)++;
      }
    }
    ok_ = eig_.info() == Eigen::Success && std::isfinite(big);
  }

  Vector solve(const Matrix& k, const Vector& rhs) const {
    Vector sol = apply(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector residual = rhs - k * sol;
      sol += apply(residual);
    }
    return sol;
  }

  bool ok() const { return ok_; }
  Index positive() const { return positive_; }
  Index negative() const { return negative_; }
  Index zero() const { return zero_; }

 private:
  Vector apply(const Vector& rhs) const {
    const Matrix& v = eig_.eigenvectors();
    const Vector t = v.transpose() * scale_.cwiseProduct(rhs);
    return scale_.cwiseProduct(v * inv_.cwiseProduct(t));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig_;
  Vector scale_;
  Vector inv_;
  Index positive_ = 0, negative_ = 0, zero_ = 0;
  bool ok_ = false;
};

struct Iterate {
  Vector x;   // free variables
  Vector s;   // inequality slacks
  Vector yc;  // equality multipliers
  Vector yh;  // inequality multipliers
  Vector zl;  // lower bound multipliers (0 where unbounded)
  Vector zu;
  Vector zs;
};

struct Step {
  Vector dx, ds, dyc, dyh, dzl, dzu, dzs;
};

class InteriorPoint {
 public:
  InteriorPoint(const NlpProblem& problem, const SolverOptions& options) : problem_(problem), opt_(options) {}

  SolveResult run(const std::optional<Vector>& x0);

 private:
  struct Eval {
    double f = 0.0;  // scaled objective
    Vector grad;     // scaled, free variables
    Vector c, h;
    Matrix jc, jh;   // free columns
    bool finite = false;
  };

  Vector full_x(const Vector& xf) const {
    Vector x = fixed_;
    for (std::size_t k = 0; k < free_.size(); ++k) x[free_[k]] = xf[static_cast<Index>(k)];
    return x;
  }

  Eval evaluate(const Vector& xf) const;
  Matrix hessian(const Iterate& it) const;
  double barrier_value(const Iterate& it, const Eval& e, double mu) const;
  Vector barrier_gradient_x(const Iterate& it, const Eval& e, double mu) const;
  double infeasibility(const Iterate& it, const Eval& e) const;
  double error(const Iterate& it, const Eval& e, double mu, KktResiduals* parts = nullptr) const;
  double max_step(const Vector& value, const Vector& delta, const std::vector<bool>& active) const;

  bool factorize(const Iterate& it, const Eval& e, const Matrix& w, double mu, bool force_regularization);
  Step compute_step(const Iterate& it, const Eval& e, double mu, const Vector& c_rhs, const Vector& h_rhs) const;

  SolveResult finish(SolveStatus status, const Iterate& it, const Eval& e, int iter, std::string message);

  const NlpProblem& problem_;
  SolverOptions opt_;

  Index n_ = 0, me_ = 0, mi_ = 0;
  IndexList free_;
  Vector fixed_;
  Vector lb_, ub_;  // free variables
  std::vector<bool> has_lb_, has_ub_;
  double obj_scale_ = 1.0;

  // Current factorization state.
  Matrix kkt_;
  KktFactor factor_;
  Vector sigma_x_, d_ineq_, e_ineq_;
  double delta_w_ = 0.0, delta_c_ = 0.0, last_delta_w_ = 0.0;

  std::vector<double> barrier_history_;
  std::chrono::steady_clock::time_point start_;
};

InteriorPoint::Eval InteriorPoint::evaluate(const Vector& xf) const {
  Eval out;
  NlpEvaluation raw;
  try {
    problem_.evaluate(full_x(xf), raw);
  } catch (const EvaluationError&) {
    return out;
  }
  out.f = obj_scale_ * raw.objective;
  out.grad = obj_scale_ * raw.gradient(free_);
  out.c = raw.equalities;
  out.h = raw.inequalities;
  out.jc = raw.equality_jacobian(Eigen::all, free_);
  out.jh = raw.inequality_jacobian(Eigen::all, free_);
  out.finite = std::isfinite(out.f) && out.grad.allFinite() && out.c.allFinite() && out.h.allFinite() &&
               out.jc.allFinite() && out.jh.allFinite();
  return out;
}

Matrix InteriorPoint::hessian(const Iterate& it) const {
  const Matrix full = problem_.lagrangian_hessian(full_x(it.x), obj_scale_, it.yc, it.yh);
  return full(free_, free_);
}

double InteriorPoint::barrier_value(const Iterate& it, const Eval& e, double mu) const {
  double phi = e.f;
  for (Index i = 0; i < it.x.size(); ++i) {
    if (has_lb_[i]) phi -= mu * std::log(it.x[i] - lb_[i]);
    if (has_ub_[i]) phi -= mu * std::log(ub_[i] - it.x[i]);
  }
  for (Index j = 0; j < mi_; ++j) phi -= mu * std::log(it.s[j]);
  return phi;
}

Vector InteriorPoint::barrier_gradient_x(const Iterate& it, const Eval& e, double mu) const {
  Vector g = e.grad;
  for (Index i = 0; i < it.x.size(); ++i) {
    if (has_lb_[i]) g[i] -= mu / (it.x[i] - lb_[i]);
    if (has_ub_[i]) g[i] += mu / (ub_[i] - it.x[i]);
  }
  return g;
}

double InteriorPoint::infeasibility(const Iterate& it, const Eval& e) const {
  return e.c.lpNorm<1>() + (e.h + it.s).lpNorm<1>();
}

double InteriorPoint::error(const Iterate& it, const Eval& e, double mu, KktResiduals* parts) const {
  const Index nz = it.zl.size() + it.zu.size() + it.zs.size();
  const double z_norm = it.zl.lpNorm<1>() + it.zu.lpNorm<1>() + it.zs.lpNorm<1>();
  const double y_norm = it.yc.lpNorm<1>() + it.yh.lpNorm<1>();
  const double m_total = static_cast<double>(me_ + mi_ + nz);
  const double s_d = std::max(kScaleMax, m_total > 0 ? (y_norm + z_norm) / m_total : 0.0) / kScaleMax;
  const double s_c = std::max(kScaleMax, nz > 0 ? z_norm / static_cast<double>(nz) : 0.0) / kScaleMax;

  Vector grad_l = e.grad - it.zl + it.zu;
  if (me_ > 0) grad_l += e.jc.transpose() * it.yc;
  if (mi_ > 0) grad_l += e.jh.transpose() * it.yh;
  double dual = grad_l.size() ? grad_l.lpNorm<Eigen::Infinity>() : 0.0;
  if (mi_ > 0) dual = std::max(dual, (it.yh - it.zs).lpNorm<Eigen::Infinity>());

  double primal = me_ > 0 ? e.c.lpNorm<Eigen::Infinity>() : 0.0;
  if (mi_ > 0) primal = std::max(primal, (e.h + it.s).lpNorm<Eigen::Infinity>());

  double comp = 0.0;
  for (Index i = 0; i < it.x.size(); ++i) {
    if (has_lb_[i]) comp = std::max(comp, std::abs((it.x[i] - lb_[i]) * it.zl[i] - mu));
    if (has_ub_[i]) comp = std::max(comp, std::abs((ub_[i] - it.x[i]) * it.zu[i] - mu));
  }
  for (Index j = 0; j < mi_; ++j) comp = std::max(comp, std::abs(it.s[j] * it.zs[j] - mu));

  if (parts) *parts = {primal, dual / s_d, comp / s_c};
  return std::max({dual / s_d, primal, comp / s_c});
}

double InteriorPoint::max_step(const Vector& value, const Vector& delta, const std::vector<bool>& active) const {
  double alpha = 1.0;
  const double tau = opt_.fraction_to_boundary;
  for (Index i = 0; i < value.size(); ++i)
    if (active[static_cast<std::size_t>(i)] && delta[i] < 0.0) alpha = std::min(alpha, -tau * value[i] / delta[i]);
  return alpha;
}

bool InteriorPoint::factorize(const Iterate& it, const Eval& e, const Matrix& w, double mu,
                              bool force_regularization) {
  const Index nf = it.x.size();
  sigma_x_ = Vector::Zero(nf);
  for (Index i = 0; i < nf; ++i) {
    if (has_lb_[i]) sigma_x_[i] += it.zl[i] / (it.x[i] - lb_[i]);
    if (has_ub_[i]) sigma_x_[i] += it.zu[i] / (ub_[i] - it.x[i]);
  }
  const Vector sigma_s = mi_ > 0 ? Vector(it.zs.cwiseQuotient(it.s)) : Vector();

  auto build = [&](double dw, double dc) {
    d_ineq_ = (sigma_s.array() + dw).inverse().matrix();
    e_ineq_ = (d_ineq_.array() + dc).inverse().matrix();
    kkt_.setZero(nf + me_, nf + me_);
    auto top = kkt_.topLeftCorner(nf, nf);
    top = w;
    top.diagonal() += sigma_x_ + Vector::Constant(nf, dw);
    if (mi_ > 0) top += e.jh.transpose() * e_ineq_.asDiagonal() * e.jh;
    if (me_ > 0) {
      kkt_.topRightCorner(nf, me_) = e.jc.transpose();
      kkt_.bottomLeftCorner(me_, nf) = e.jc;
      kkt_.bottomRightCorner(me_, me_).diagonal().setConstant(-dc);
    }
    factor_.compute(kkt_);
    return factor_.ok() && factor_.positive() == nf && factor_.negative() == me_ && factor_.zero() == 0;
  };

  delta_c_ = 0.0;
  double dw = force_regularization ? std::max(1e-4, last_delta_w_ * 10.0) : 0.0;
  if (build(dw, 0.0)) {
    delta_w_ = dw;
    if (dw > 0.0) last_delta_w_ = dw;
    return true;
  }
  if (factor_.zero() > 0) {
    delta_c_ = 1e-8 * std::pow(mu, 0.25);
    if (build(dw, delta_c_)) {
      delta_w_ = dw;
      return true;
    }
  }
  if (dw == 0.0) dw = last_delta_w_ == 0.0 ? 1e-4 : std::max(1e-20, last_delta_w_ / 3.0);
  while (dw <= 1e40) {
    if (build(dw, delta_c_)) {
      delta_w_ = last_delta_w_ = dw;
      return true;
    }
    dw *= last_delta_w_ == 0.0 ? 100.0 : 8.0;
  }
  return false;
}

Step InteriorPoint::compute_step(const Iterate& it, const Eval& e, double mu, const Vector& c_rhs,
                                 const Vector& h_rhs) const {
  const Index nf = it.x.size();
  const Vector r_x = barrier_gradient_x(it, e, mu) + (me_ > 0 ? Vector(e.jc.transpose() * it.yc) : Vector::Zero(nf)) +
                     (mi_ > 0 ? Vector(e.jh.transpose() * it.yh) : Vector::Zero(nf));
  Vector r_s;
  if (mi_ > 0) r_s = it.yh - mu * it.s.cwiseInverse();

  Vector rhs(nf + me_);
  rhs.head(nf) = -r_x;
  if (mi_ > 0) rhs.head(nf) -= e.jh.transpose() * e_ineq_.cwiseProduct(h_rhs - d_ineq_.cwiseProduct(r_s));
  if (me_ > 0) rhs.tail(me_) = -c_rhs;

  const Vector sol = factor_.solve(kkt_, rhs);
  Step d;
  d.dx = sol.head(nf);
  d.dyc = sol.tail(me_);
  if (mi_ > 0) {
    d.dyh = e_ineq_.cwiseProduct(e.jh * d.dx + h_rhs - d_ineq_.cwiseProduct(r_s));
    d.ds = -d_ineq_.cwiseProduct(r_s + d.dyh);
    d.dzs = (mu - it.s.cwiseProduct(it.zs).array() - it.zs.cwiseProduct(d.ds).array()).matrix().cwiseQuotient(it.s);
  } else {
    d.dyh = d.ds = d.dzs = Vector();
  }
  d.dzl = Vector::Zero(nf);
  d.dzu = Vector::Zero(nf);
  for (Index i = 0; i < nf; ++i) {
    if (has_lb_[i]) {
      const double gap = it.x[i] - lb_[i];
      d.dzl[i] = (mu - gap * it.zl[i] - it.zl[i] * d.dx[i]) / gap;
    }
    if (has_ub_[i]) {
      const double gap = ub_[i] - it.x[i];
      d.dzu[i] = (mu - gap * it.zu[i] + it.zu[i] * d.dx[i]) / gap;
    }
  }
  return d;
}

SolveResult InteriorPoint::finish(SolveStatus status, const Iterate& it, const Eval& e, int iter,
                                  std::string message) {
  SolveResult r;
  r.status = status;
  r.x = full_x(it.x);
  r.iterations = iter;
  r.message = std::move(message);
  r.barrier_history = std::move(barrier_history_);
  const double inv = 1.0 / obj_scale_;
  r.y_eq = inv * it.yc;
  r.y_ineq = inv * it.yh;
  r.z_lower = Vector::Zero(n_);
  r.z_upper = Vector::Zero(n_);
  for (std::size_t k = 0; k < free_.size(); ++k) {
    r.z_lower[free_[k]] = inv * it.zl[static_cast<Index>(k)];
    r.z_upper[free_[k]] = inv * it.zu[static_cast<Index>(k)];
  }
  r.objective = e.finite ? e.f * inv : std::numeric_limits<double>::quiet_NaN();
  if (e.finite) error(it, e, 0.0, &r.kkt);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return r;
}

SolveResult InteriorPoint::run(const std::optional<Vector>& x0_opt) {
  start_ = std::chrono::steady_clock::now();
  n_ = problem_.num_variables();
  me_ = problem_.num_equalities();
  mi_ = problem_.num_inequalities();
  const Vector lb_all = problem_.lower_bounds();
  const Vector ub_all = problem_.upper_bounds();
  Vector x_start = x0_opt ? *x0_opt : problem_.starting_point();
  if (lb_all.size() != n_ || ub_all.size() != n_ || x_start.size() != n_)
    throw ConfigError("NLP dimension mismatch between bounds, start and variable count");

  fixed_ = x_start;
  for (Index i = 0; i < n_; ++i) {
    if (lb_all[i] > ub_all[i]) throw ConfigError("NLP variable with lower bound above upper bound");
    if (lb_all[i] == ub_all[i]) {
      fixed_[i] = lb_all[i];
    } else {
      free_.push_back(i);
    }
  }
  const Index nf = static_cast<Index>(free_.size());
  lb_ = lb_all(free_);
  ub_ = ub_all(free_);
  has_lb_.resize(static_cast<std::size_t>(nf));
  has_ub_.resize(static_cast<std::size_t>(nf));

  // Push the start strictly inside the bounds.
  Iterate it;
  it.x = x_start(free_);
  const double kappa = opt_.bound_push;
  for (Index i = 0; i < nf; ++i) {
    has_lb_[i] = std::isfinite(lb_[i]);
    has_ub_[i] = std::isfinite(ub_[i]);
    if (has_lb_[i] && has_ub_[i]) {
      const double push_l = std::min(kappa * std::max(1.0, std::abs(lb_[i])), kappa * (ub_[i] - lb_[i]));
      const double push_u = std::min(kappa * std::max(1.0, std::abs(ub_[i])), kappa * (ub_[i] - lb_[i]));
      it.x[i] = std::clamp(it.x[i], lb_[i] + push_l, ub_[i] - push_u);
    } else if (has_lb_[i]) {
      it.x[i] = std::max(it.x[i], lb_[i] + kappa * std::max(1.0, std::abs(lb_[i])));
    } else if (has_ub_[i]) {
      it.x[i] = std::min(it.x[i], ub_[i] - kappa * std::max(1.0, std::abs(ub_[i])));
    }
  }

  // Objective scaling from the gradient at the start.
  {
    NlpEvaluation raw = problem_.evaluate(full_x(it.x));
    const double gmax = nf > 0 ? raw.gradient(free_).lpNorm<Eigen::Infinity>() : 0.0;
    obj_scale_ = gmax > kScaleMax ? kScaleMax / gmax : 1.0;
  }

  Eval e = evaluate(it.x);
  if (!e.finite) return finish(SolveStatus::NumericalError, it, e, 0, "non-finite evaluation at start");

  it.s = mi_ > 0 ? Vector((-e.h).cwiseMax(kappa)) : Vector();
  it.zl = Vector::Zero(nf);
  it.zu = Vector::Zero(nf);
  for (Index i = 0; i < nf; ++i) {
    if (has_lb_[i]) it.zl[i] = 1.0;
    if (has_ub_[i]) it.zu[i] = 1.0;
  }
  it.zs = Vector::Ones(mi_);

  // Least-squares multiplier estimate.
  it.yc = Vector::Zero(me_);
  it.yh = Vector::Ones(mi_);
  if (me_ + mi_ > 0 && nf > 0) {
    Matrix a = Matrix::Zero(nf + mi_, me_ + mi_);
    if (me_ > 0) a.topLeftCorner(nf, me_) = e.jc.transpose();
    if (mi_ > 0) {
      a.block(0, me_, nf, mi_) = e.jh.transpose();
      a.bottomRightCorner(mi_, mi_).setIdentity();
    }
    Vector b(nf + mi_);
    b.head(nf) = -(e.grad - it.zl + it.zu);
    if (mi_ > 0) b.tail(mi_) = it.zs;
    const Vector y = a.colPivHouseholderQr().solve(b);
    if (y.allFinite() && y.lpNorm<Eigen::Infinity>() <= 1e3) {
      it.yc = y.head(me_);
      if (mi_ > 0) it.yh = y.tail(mi_);
    }
  }

  const double mu_min = opt_.tol_kkt / 10.0;
  double mu = opt_.mu_init;
  double nu = 1.0;  // merit penalty
  int line_search_failures = 0;

  Matrix bfgs;
  Vector prev_x, prev_grad_l_part;
  Matrix prev_jc, prev_jh;
  Vector prev_grad;
  const bool exact = opt_.hessian == HessianMode::Exact && problem_.has_hessian();
  if (!exact) bfgs = Matrix::Identity(nf, nf);

  for (int iter = 0; iter <= opt_.max_iter; ++iter) {
    KktResiduals parts;
    if (error(it, e, 0.0, &parts) <= opt_.tol_kkt) return finish(SolveStatus::Optimal, it, e, iter, "converged");
    if (iter == opt_.max_iter) return finish(SolveStatus::IterationLimit, it, e, iter, "iteration limit reached");

    while (mu > mu_min && error(it, e, mu) <= opt_.barrier_tol_factor * mu) {
      mu = std::max(mu_min, mu * opt_.mu_reduction);
    }
    if (opt_.record_barrier_history) barrier_history_.push_back(mu);

    if (nf == 0) {
      const bool feasible = parts.primal <= opt_.tol_kkt;
      return finish(feasible ? SolveStatus::Optimal : SolveStatus::LocallyInfeasible, it, e, iter,
                    "no free variables");
    }

    Matrix w = exact ? hessian(it) : bfgs;
    if (!w.allFinite()) return finish(SolveStatus::NumericalError, it, e, iter, "non-finite Hessian");

    bool accepted = false;
    Iterate trial;
    Eval e_trial;
    for (int attempt = 0; attempt < 6 && !accepted; ++attempt) {
      if (!factorize(it, e, w, mu, attempt > 0))
        return finish(SolveStatus::NumericalError, it, e, iter, "KKT inertia correction failed");

      const Vector h_res = mi_ > 0 ? Vector(e.h + it.s) : Vector();
      const Step d = compute_step(it, e, mu, e.c, h_res);
      if (!d.dx.allFinite()) return finish(SolveStatus::NumericalError, it, e, iter, "non-finite step");

      // Fraction to the boundary.
      std::vector<bool> act_l(has_lb_), act_u(has_ub_), all_s(static_cast<std::size_t>(mi_), true);
      double alpha_max = std::min({max_step(it.x - lb_, d.dx, act_l), max_step(ub_ - it.x, -d.dx, act_u),
                                   mi_ > 0 ? max_step(it.s, d.ds, all_s) : 1.0});
      const double alpha_z = std::min({max_step(it.zl, d.dzl, act_l), max_step(it.zu, d.dzu, act_u),
                                       mi_ > 0 ? max_step(it.zs, d.dzs, all_s) : 1.0});

      // Merit function and penalty update.
      const double theta0 = infeasibility(it, e);
      const double phi0 = barrier_value(it, e, mu);
      const Vector gx = barrier_gradient_x(it, e, mu);
      double dphi = gx.dot(d.dx);
      double curvature = d.dx.dot(w * d.dx) + d.dx.dot((sigma_x_.array() + delta_w_).matrix().cwiseProduct(d.dx));
      if (mi_ > 0) {
        dphi -= mu * d.ds.cwiseQuotient(it.s).sum();
        curvature += d.ds.dot((it.zs.cwiseQuotient(it.s).array() + delta_w_).matrix().cwiseProduct(d.ds));
      }
      if (theta0 > 0.0) {
        const double needed = (dphi + 0.5 * std::max(0.0, curvature)) / (0.9 * theta0);
        nu = std::max(1.01 * needed + 1e-6, 0.1 * nu);
      }
      const double slope = dphi - nu * theta0;
      const double merit0 = phi0 + nu * theta0;

      auto take = [&](const Step& step, double a) {
        Iterate t = it;
        t.x += a * step.dx;
        if (mi_ > 0) t.s += a * step.ds;
        return t;
      };
      auto merit_of = [&](const Iterate& t, Eval& et) {
        et = evaluate(t.x);
        if (!et.finite) return kInf;
        return barrier_value(t, et, mu) + nu * infeasibility(t, et);
      };

      double alpha = alpha_max;
      bool first = true;
      while (alpha > 1e-14) {
        trial = take(d, alpha);
        const double m = merit_of(trial, e_trial);
        if (std::isfinite(m) && m <= merit0 + 1e-4 * alpha * std::min(slope, 0.0) + 1e-14 * std::abs(merit0)) {
          accepted = true;
          break;
        }
        if (first && e_trial.finite && infeasibility(trial, e_trial) >= theta0) {
          // Second-order correction on the full step.
          const Vector c_soc = alpha * e.c + e_trial.c;
          const Vector h_soc = mi_ > 0 ? Vector(alpha * h_res + e_trial.h + trial.s) : Vector();
          const Step ds = compute_step(it, e, mu, c_soc, h_soc);
          const double a_soc = std::min({max_step(it.x - lb_, ds.dx, act_l), max_step(ub_ - it.x, -ds.dx, act_u),
                                         mi_ > 0 ? max_step(it.s, ds.ds, all_s) : 1.0});
          Iterate t_soc = take(ds, a_soc);
          Eval e_soc;
          const double m_soc = merit_of(t_soc, e_soc);
          if (a_soc >= 0.99 && std::isfinite(m_soc) && m_soc <= merit0 + 1e-4 * alpha * std::min(slope, 0.0)) {
            trial = std::move(t_soc);
            e_trial = std::move(e_soc);
            // Multiplier and bound-dual steps follow the original direction.
            accepted = true;
            break;
          }
        }
        first = false;
        alpha *= 0.5;
      }
      if (!accepted) continue;

      // Multipliers: primal step for y, dual step for z.
      trial.yc = it.yc + alpha * d.dyc;
      if (mi_ > 0) {
        trial.yh = it.yh + alpha * d.dyh;
        trial.zs = it.zs + alpha_z * d.dzs;
      }
      trial.zl = it.zl + alpha_z * d.dzl;
      trial.zu = it.zu + alpha_z * d.dzu;
      // Keep bound multipliers within a factor of the primal-dual ratio.
      constexpr double kSigma = 1e10;
      for (Index i = 0; i < nf; ++i) {
        if (has_lb_[i]) {
          const double gap = trial.x[i] - lb_[i];
          trial.zl[i] = std::clamp(trial.zl[i], mu / (kSigma * gap), kSigma * mu / gap);
        }
        if (has_ub_[i]) {
          const double gap = ub_[i] - trial.x[i];
          trial.zu[i] = std::clamp(trial.zu[i], mu / (kSigma * gap), kSigma * mu / gap);
        }
      }
      for (Index j = 0; j < mi_; ++j)
        trial.zs[j] = std::clamp(trial.zs[j], mu / (kSigma * trial.s[j]), kSigma * mu / trial.s[j]);
    }

    if (!accepted) {
      ++line_search_failures;
      const bool infeasible = infeasibility(it, e) > opt_.tol_kkt;
      if (infeasible && (nu > 1e10 || line_search_failures > 3))
        return finish(SolveStatus::LocallyInfeasible, it, e, iter, "line search failed while infeasible");
      return finish(SolveStatus::NumericalError, it, e, iter, "line search failed");
    }

    if (!exact) {
      // Gradient of the Lagrangian (without bound terms) at both points with the new multipliers.
      auto grad_l = [&](const Eval& ev) {
        Vector g = ev.grad;
        if (me_ > 0) g += ev.jc.transpose() * trial.yc;
        if (mi_ > 0) g += ev.jh.transpose() * trial.yh;
        return g;
      };
      const Vector sk = trial.x - it.x;
      const Vector yk = grad_l(e_trial) - grad_l(e);
      const double sbs = sk.dot(bfgs * sk);
      if (sbs > 1e-300) {
        if (iter == 0) {
          const double sy = sk.dot(yk);
          if (sy > 0.0) bfgs *= sy / sk.squaredNorm();
        }
        const Vector bs = bfgs * sk;
        const double sbs2 = sk.dot(bs);
        const double sy = sk.dot(yk);
        const double theta = sy >= 0.2 * sbs2 ? 1.0 : 0.8 * sbs2 / (sbs2 - sy);
        const Vector r = theta * yk + (1.0 - theta) * bs;
        const double sr = sk.dot(r);
        if (sr > 1e-300) bfgs += r * r.transpose() / sr - bs * bs.transpose() / sbs2;
      }
    }

    it = std::move(trial);
    e = std::move(e_trial);
  }
  return finish(SolveStatus::IterationLimit, it, e, opt_.max_iter, "iteration limit reached");
}

}  // namespace

SolveResult solve(const NlpProblem& problem, const SolverOptions& options, const std::optional<Vector>& x0) {
  InteriorPoint ipm(problem, options);
  return ipm.run(x0);
}

KktResiduals kkt_certificate(const NlpProblem& problem, const SolveResult& result) {
  // Independent evaluation in the unscaled problem, then the same dual
  // scaling convention as the solver (documented with SolverOptions).
  const Vector& x = result.x;
  const NlpEvaluation e = problem.evaluate(x);
  const Vector lb = problem.lower_bounds();
  const Vector ub = problem.upper_bounds();

  KktResiduals out;
  double primal = 0.0;
  if (e.equalities.size()) primal = e.equalities.cwiseAbs().maxCoeff();
  for (Index j = 0; j < e.inequalities.size(); ++j) primal = std::max(primal, e.inequalities[j]);
  for (Index i = 0; i < x.size(); ++i) primal = std::max({primal, lb[i] - x[i], x[i] - ub[i]});
  out.primal = primal;

  // The objective scale is re-derived from the gradient at x rather than at
  // the start, so this is an independent measurement, not a replay.
  Vector grad_l = e.gradient - result.z_lower + result.z_upper;
  if (e.equalities.size()) grad_l += e.equality_jacobian.transpose() * result.y_eq;
  if (e.inequalities.size()) grad_l += e.inequality_jacobian.transpose() * result.y_ineq;
  std::vector<Index> free;
  for (Index i = 0; i < x.size(); ++i)
    if (lb[i] < ub[i]) free.push_back(i);
  const double gf = free.empty() ? 0.0 : e.gradient(free).lpNorm<Eigen::Infinity>();
  const double obj_scale = gf > kScaleMax ? kScaleMax / gf : 1.0;

  const double nz = static_cast<double>(2 * free.size() + static_cast<std::size_t>(e.inequalities.size()));
  const double z_norm = obj_scale * (result.z_lower(free).lpNorm<1>() + result.z_upper(free).lpNorm<1>() +
                                     result.y_ineq.lpNorm<1>());
  const double y_norm = obj_scale * (result.y_eq.lpNorm<1>() + result.y_ineq.lpNorm<1>());
  const double m_total = static_cast<double>(e.equalities.size() + e.inequalities.size()) + nz;
  const double s_d = std::max(kScaleMax, m_total > 0 ? (y_norm + z_norm) / m_total : 0.0) / kScaleMax;
  const double s_c = std::max(kScaleMax, nz > 0 ? z_norm / nz : 0.0) / kScaleMax;

  out.stationarity = free.empty() ? 0.0 : obj_scale * grad_l(free).lpNorm<Eigen::Infinity>() / s_d;

  double comp = 0.0;
  for (Index i : free) {
    if (std::isfinite(lb[i])) comp = std::max(comp, std::abs((x[i] - lb[i]) * result.z_lower[i]));
    if (std::isfinite(ub[i])) comp = std::max(comp, std::abs((ub[i] - x[i]) * result.z_upper[i]));
  }
  for (Index j = 0; j < e.inequalities.size(); ++j)
    comp = std::max(comp, std::abs(e.inequalities[j] * result.y_ineq[j]));
  double sign = 0.0;
  sign = std::max(sign, -result.y_ineq.minCoeff());
  sign = std::max({sign, -result.z_lower.minCoeff(), -result.z_upper.minCoeff()});
  out.complementarity = std::max(obj_scale * comp / s_c, obj_scale * sign);
  return out;
}

}  // namespace mfopf
