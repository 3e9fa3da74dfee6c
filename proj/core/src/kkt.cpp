#include "softrestrict/kkt.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace softrestrict {

namespace {

constexpr double kBacktrackShrink = 0.5;
constexpr int kMaxBacktracks = 40;
constexpr int kMaxBracketDoublings = 200;

} // namespace

KktSolver::KktSolver(const Dataset& data, const RestrictionSystem& system, SolverOptions opts)
    : owned_loss_(std::make_unique<LeastSquaresLoss>(data)), loss_(owned_loss_.get()),
      system_(&system), opts_(opts) {
  if (loss_->dim() != system.p())
    throw std::invalid_argument("KktSolver: dataset and restriction system disagree on p");
  theta_tilde_ = loss_->fit();
  h_tilde_ = system.eval_h(theta_tilde_);
  closed_form_ = loss_->quadratic() && system.linear();
}

KktSolver::KktSolver(const Loss& loss, const RestrictionSystem& system, SolverOptions opts)
    : loss_(&loss), system_(&system), opts_(opts) {
  if (loss_->dim() != system.p())
    throw std::invalid_argument("KktSolver: loss and restriction system disagree on p");
  theta_tilde_ = loss_->fit();
  h_tilde_ = system.eval_h(theta_tilde_);
  closed_form_ = loss_->quadratic() && system.linear();
}

double KktSolver::stationarity_residual(const Eigen::VectorXd& theta, double lambda) const {
  return (loss_->gradient(theta) + lambda * system_->eval_h_grad(theta))
      .cwiseAbs()
      .maxCoeff();
}

// Stationarity solve in theta for a fixed multiplier. For a quadratic loss
// with linear restrictions the system is linear and solved exactly; the
// general case runs damped Newton from `start`.
Eigen::VectorXd KktSolver::theta_for_lambda(double lambda, const Eigen::VectorXd& start,
                                            double c, int* newton_iters) const {
  const int p = loss_->dim();
  if (closed_form_) {
    const Eigen::MatrixXd hh = system_->eval_h_hess(start); // constant 2 G' Sigma^{-1} G
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(p);
    const Eigen::VectorXd hc = system_->eval_h_grad(origin);
    const Eigen::MatrixXd lhs = loss_->hessian(start) + lambda * hh;
    const Eigen::VectorXd rhs = -loss_->gradient(origin) - lambda * hc;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
      throw SolverError("solve_inner: stationarity system not factorizable", c,
                        std::numeric_limits<double>::quiet_NaN(), 0.0);
    if (newton_iters) *newton_iters += 1;
    return ldlt.solve(rhs);
  }

  Eigen::VectorXd theta = start;
  Eigen::VectorXd grad_h = system_->eval_h_grad(theta);
  Eigen::VectorXd residual = loss_->gradient(theta) + lambda * grad_h;
  double damping = 0.0;
  for (int it = 0; it < opts_.max_newton_iterations; ++it) {
    const double scale = 1.0 + lambda * grad_h.cwiseAbs().maxCoeff();
    if (residual.cwiseAbs().maxCoeff() <= opts_.stationarity_tol * scale) {
      if (newton_iters) *newton_iters += it;
      return theta;
    }
    Eigen::MatrixXd jac = loss_->hessian(theta) + lambda * system_->eval_h_hess(theta);
    if (damping > 0.0) jac.diagonal().array() += damping;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(jac);
    if (ldlt.info() != Eigen::Success || ldlt.isNegative()) {
      damping = damping > 0.0 ? damping * 10.0 : 1e-8 * (1.0 + jac.cwiseAbs().maxCoeff());
      continue;
    }
    const Eigen::VectorXd step = ldlt.solve(-residual);
    double alpha = 1.0;
    const double res_norm = residual.norm();
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      const Eigen::VectorXd trial = theta + alpha * step;
      const Eigen::VectorXd trial_grad_h = system_->eval_h_grad(trial);
      const Eigen::VectorXd trial_res = loss_->gradient(trial) + lambda * trial_grad_h;
      if (trial_res.norm() <= (1.0 - 1e-4 * alpha) * res_norm) {
        theta = trial;
        grad_h = trial_grad_h;
        residual = trial_res;
        accepted = true;
        break;
      }
      alpha *= kBacktrackShrink;
    }
    if (accepted) {
      damping = 0.0;
    } else {
      damping = damping > 0.0 ? damping * 10.0 : 1e-8 * (1.0 + jac.cwiseAbs().maxCoeff());
      if (damping > 1e12)
        throw SolverError("solve_inner: stationarity Newton stalled", c,
                          residual.cwiseAbs().maxCoeff(), 0.0);
    }
  }
  throw SolverError("solve_inner: stationarity Newton did not converge", c,
                    residual.cwiseAbs().maxCoeff(), 0.0);
}

KktSolution KktSolver::solve(double c, const KktSolution* warm_start) const {
  if (!(c > 0.0)) throw std::invalid_argument("solve_inner: tolerance c must be positive");

  KktSolution sol;
  sol.c = c;
  if (h_tilde_ <= c) {
    // Slack constraint (h(theta_tilde) = c counts as inactive).
    sol.theta = theta_tilde_;
    sol.lambda = 0.0;
    sol.active = false;
    sol.h_value = h_tilde_;
    sol.kkt_residual = stationarity_residual(theta_tilde_, 0.0);
    sol.iterations = 0;
    return sol;
  }

  const double target_tol = opts_.constraint_tol * (1.0 + c);
  int evals = 0;

  // h(theta(lambda)) - c, decreasing in lambda on convex problems.
  Eigen::VectorXd theta = theta_tilde_;
  auto eval_m = [&](double lambda) {
    theta = theta_for_lambda(lambda, theta, c, nullptr);
    ++evals;
    return system_->eval_h(theta) - c;
  };

  // Bracket [lo, hi] with m(lo) > 0 > m(hi); m(0) = h_tilde - c > 0.
  double lo = 0.0;
  double hi;
  {
    double guess = 0.0;
    if (warm_start && warm_start->lambda > 0.0 && warm_start->theta.size() == theta.size()) {
      theta = warm_start->theta;
      guess = warm_start->lambda;
    } else {
      const Eigen::VectorXd a0 = system_->eval_h_grad(theta_tilde_);
      const Eigen::LDLT<Eigen::MatrixXd> hldlt(loss_->hessian(theta_tilde_));
      const double slope = a0.dot(hldlt.solve(a0));
      guess = slope > 0.0 ? (h_tilde_ - c) / slope : 1.0;
    }
    hi = std::max(guess, 1e-12);
    double m_hi = eval_m(hi);
    int doublings = 0;
    while (m_hi > 0.0) {
      lo = hi;
      hi *= 2.0;
      m_hi = eval_m(hi);
      if (++doublings > kMaxBracketDoublings)
        throw SolverError("solve_inner: could not bracket the multiplier", c,
                          stationarity_residual(theta, hi), m_hi);
    }
    if (m_hi == 0.0) lo = hi; // exact hit; loop below exits immediately
  }

  // Safeguarded Newton on m(lambda) within the bracket.
  double lambda = hi;
  double m_val = system_->eval_h(theta) - c;
  int outer = 0;
  while (std::fabs(m_val) > target_tol) {
    if (++outer > opts_.max_outer_iterations)
      throw SolverError("solve_inner: multiplier iteration did not converge", c,
                        stationarity_residual(theta, lambda), m_val);
    if (m_val > 0.0) lo = lambda; else hi = lambda;

    // m'(lambda) = grad_h' dtheta/dlambda with dtheta/dlambda = -J^{-1} grad_h.
    const Eigen::VectorXd grad_h = system_->eval_h_grad(theta);
    const Eigen::MatrixXd jac = loss_->hessian(theta) + lambda * system_->eval_h_hess(theta);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(jac);
    double next = std::numeric_limits<double>::quiet_NaN();
    if (ldlt.info() == Eigen::Success) {
      const double slope = -grad_h.dot(ldlt.solve(grad_h));
      if (slope < 0.0) next = lambda - m_val / slope;
    }
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    lambda = next;
    m_val = eval_m(lambda);
    if (hi - lo < 1e-18 * (1.0 + hi)) break; // bracket exhausted at roundoff
  }

  sol.theta = theta;
  sol.lambda = lambda;
  sol.active = true;
  sol.h_value = system_->eval_h(theta);
  sol.kkt_residual = stationarity_residual(theta, lambda);
  sol.iterations = outer + evals;
  if (std::fabs(sol.h_value - c) > 1e-8 * (1.0 + c))
    throw SolverError("solve_inner: constraint residual above tolerance", c,
                      sol.kkt_residual, sol.h_value - c);
  return sol;
}

std::vector<KktSolution> KktSolver::solve_path(const std::vector<double>& c_grid) const {
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0.0))
      throw std::invalid_argument("solve_path: grid values must be positive");
    if (i > 0 && c_grid[i] <= c_grid[i - 1])
      throw std::invalid_argument("solve_path: grid must be strictly ascending");
  }
  std::vector<KktSolution> path(c_grid.size());
  // Sweep from the largest tolerance down: lambda grows monotonically, so
  // the previous solution is a natural warm start.
  const KktSolution* warm = nullptr;
  for (std::size_t k = c_grid.size(); k-- > 0;) {
    try {
      path[k] = solve(c_grid[k], warm);
    } catch (const SolverError&) {
      throw; // already carries the offending c
    }
    warm = &path[k];
  }
  return path;
}

KktSolution solve_inner(const Dataset& data, const RestrictionSystem& system, double c,
                        const KktSolution* warm_start, const SolverOptions& opts) {
  return KktSolver(data, system, opts).solve(c, warm_start);
}

std::vector<KktSolution> solve_path(const Dataset& data, const RestrictionSystem& system,
                                    const std::vector<double>& c_grid,
                                    const SolverOptions& opts) {
  return KktSolver(data, system, opts).solve_path(c_grid);
}

} // namespace softrestrict
