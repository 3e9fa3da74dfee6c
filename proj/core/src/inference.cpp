#include "softrestrict/inference.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "softrestrict/stats.hpp"

namespace softrestrict {

namespace {

// Solve A X = B through a pivoted factorization, rejecting condition
// numbers above 1e12.
Eigen::MatrixXd conditioned_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const char* what) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const auto& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double smallest = ev.cwiseAbs().minCoeff();
  if (!(smallest > 0.0) || largest / smallest > 1e12)
    throw SolverError(std::string(what) + ": matrix is singular or ill-conditioned", 0.0,
                      largest > 0.0 ? smallest / largest : 0.0, 0.0);
  const Eigen::MatrixXd projected = es.eigenvectors().transpose() * B;
  const Eigen::MatrixXd scaled = projected.array().colwise() / ev.array();
  return es.eigenvectors() * scaled;
}

} // namespace

AsymptoticBlocks compute_blocks(const KktSolution& sol, const Dataset& data,
                                const RestrictionSystem& system) {
  const LeastSquaresLoss loss(data);
  return compute_blocks(sol, loss, system);
}

AsymptoticBlocks compute_blocks(const KktSolution& sol, const Loss& loss,
                                const RestrictionSystem& system) {
  const int p = loss.dim();
  AsymptoticBlocks out;
  out.scale_n = loss.sample_size();
  out.active = sol.active;
  out.Sigma_psi = loss.score_covariance(sol.theta);
  const Eigen::MatrixXd H = loss.hessian(sol.theta);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

  if (!sol.active) {
    out.A = H;
    out.a = Eigen::VectorXd::Zero(p); // no binding direction
    out.M = conditioned_solve(H, eye, "compute_blocks");
    out.V1 = out.M * out.Sigma_psi * out.M.transpose();
    out.V1 = 0.5 * (out.V1 + out.V1.transpose()).eval();
    out.V2 = Eigen::VectorXd::Zero(p);
    out.V3 = 0.0;
    return out;
  }

  out.a = system.eval_h_grad(sol.theta);
  out.A = H + sol.lambda * system.eval_h_hess(sol.theta);
  const Eigen::MatrixXd Ainv = conditioned_solve(out.A, eye, "compute_blocks");
  const Eigen::VectorXd Ainv_a = Ainv * out.a;
  const double s = out.a.dot(Ainv_a);
  if (!(s > 0.0))
    throw SolverError("compute_blocks: a'A^{-1}a <= 0, second-order condition failed",
                      sol.c, s, 0.0);
  out.M = Ainv - Ainv_a * Ainv_a.transpose() / s;
  out.M = 0.5 * (out.M + out.M.transpose()).eval();
  out.V1 = out.M * out.Sigma_psi * out.M.transpose();
  out.V1 = 0.5 * (out.V1 + out.V1.transpose()).eval();
  out.V2 = -out.M * (out.Sigma_psi * Ainv_a) / s;
  out.V3 = Ainv_a.dot(out.Sigma_psi * Ainv_a) / (s * s);
  return out;
}

IntervalSet confidence_intervals(const Eigen::VectorXd& estimate,
                                 const AsymptoticBlocks& blocks, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence_intervals: level must lie in (0,1)");
  const int p = static_cast<int>(estimate.size());
  if (blocks.V1.rows() != p)
    throw std::invalid_argument("confidence_intervals: estimate/blocks dimension mismatch");
  const double z = norm_ppf(0.5 * (1.0 + level));
  IntervalSet out;
  out.se.resize(p);
  for (int k = 0; k < p; ++k) {
    const double v = blocks.V1(k, k);
    if (v < -1e-12 * (1.0 + blocks.V1.cwiseAbs().maxCoeff()))
      throw SolverError("confidence_intervals: negative variance diagonal", 0.0, v, 0.0);
    out.se[k] = std::sqrt(std::max(v, 0.0) / blocks.scale_n);
  }
  out.lower = estimate - z * out.se;
  out.upper = estimate + z * out.se;
  return out;
}

DebiasedEstimate debias(const KktSolution& sol_at_chat, const Eigen::VectorXd& theta_tilde,
                        const Dataset& data, const RestrictionSystem& system, double level) {
  return debias(sol_at_chat, theta_tilde, data, system,
                compute_blocks(sol_at_chat, data, system), level);
}

DebiasedEstimate debias(const KktSolution& sol_at_chat, const Eigen::VectorXd& theta_tilde,
                        const Dataset& data, const RestrictionSystem& system,
                        const AsymptoticBlocks& blocks, double level) {
  const LeastSquaresLoss loss(data);
  DebiasedEstimate out;
  out.level = level;
  if (sol_at_chat.lambda == 0.0) {
    out.bias_correction = Eigen::VectorXd::Zero(loss.dim());
  } else {
    const Eigen::VectorXd a_tilde = system.eval_h_grad(theta_tilde);
    out.bias_correction =
        sol_at_chat.lambda *
        conditioned_solve(loss.hessian(theta_tilde), a_tilde, "debias").col(0);
  }
  out.theta_db = sol_at_chat.theta + out.bias_correction;
  const IntervalSet ci = confidence_intervals(out.theta_db, blocks, level);
  out.se = ci.se;
  out.ci_lower = ci.lower;
  out.ci_upper = ci.upper;
  return out;
}

WaldResult wald_test(const RestrictionExpr& restriction, const Eigen::VectorXd& theta_tilde,
                     const Dataset& data) {
  const LeastSquaresLoss loss(data);
  const double g = restriction.value(theta_tilde);
  const Eigen::VectorXd grad = restriction.gradient(theta_tilde);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(loss.dim(), loss.dim());
  const Eigen::MatrixXd Hinv = conditioned_solve(loss.hessian(theta_tilde), eye, "wald_test");
  const Eigen::MatrixXd sandwich = Hinv * loss.score_covariance(theta_tilde) * Hinv.transpose();
  const double mid = grad.dot(sandwich * grad);
  if (!(mid > 0.0))
    throw SolverError("wald_test: degenerate restriction variance", 0.0, mid, 0.0);
  WaldResult out;
  out.statistic = data.n() * g * g / mid;
  out.p_value = chi2_sf(out.statistic, 1.0);
  return out;
}

} // namespace softrestrict
