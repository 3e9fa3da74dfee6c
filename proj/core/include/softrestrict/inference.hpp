#pragma once

#include "softrestrict/kkt.hpp"
#include "softrestrict/model.hpp"
#include "softrestrict/restriction.hpp"

namespace softrestrict {

/// Plug-in variance blocks of the linearized KKT system at a solution.
/// In the binding regime:
///   A = H + lambda hess(h),  a = grad h(theta_hat),
///   M = A^{-1} - A^{-1} a (a'A^{-1}a)^{-1} a' A^{-1}   (projected inverse Hessian)
///   V1 = M Sigma_psi M', V2 = -M Sigma_psi A^{-1}a (a'A^{-1}a)^{-1},
///   V3 = (a'A^{-1}a)^{-2} a'A^{-1} Sigma_psi A^{-1} a.
/// In the slack regime A = H, a = 0, M = H^{-1}, V1 is the sandwich
/// H^{-1} Sigma_psi H^{-1}, V2 = 0, V3 = 0.
struct AsymptoticBlocks {
  Eigen::MatrixXd A;
  Eigen::VectorXd a;
  Eigen::MatrixXd M;
  Eigen::MatrixXd Sigma_psi;
  Eigen::MatrixXd V1;
  Eigen::VectorXd V2;
  double V3 = 0.0;
  int scale_n = 0;
  bool active = false;
};

AsymptoticBlocks compute_blocks(const KktSolution& sol, const Dataset& data,
                                const RestrictionSystem& system);
AsymptoticBlocks compute_blocks(const KktSolution& sol, const Loss& loss,
                                const RestrictionSystem& system);

/// theta_db = theta_hat(c_hat) + lambda_hat H^{-1} a_tilde with
/// a_tilde = grad h(theta_tilde) and H the loss Hessian at theta_tilde.
/// Intervals are centered at theta_db using V1 at the solution.
struct DebiasedEstimate {
  Eigen::VectorXd theta_db;
  Eigen::VectorXd bias_correction;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  double level = 0.0;
};

DebiasedEstimate debias(const KktSolution& sol_at_chat, const Eigen::VectorXd& theta_tilde,
                        const Dataset& data, const RestrictionSystem& system,
                        double level = 0.95);
DebiasedEstimate debias(const KktSolution& sol_at_chat, const Eigen::VectorXd& theta_tilde,
                        const Dataset& data, const RestrictionSystem& system,
                        const AsymptoticBlocks& blocks, double level);

struct IntervalSet {
  Eigen::VectorXd se;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// se_k = sqrt(V1[k,k] / n); bounds est +- z_{(1+level)/2} se.
IntervalSet confidence_intervals(const Eigen::VectorXd& estimate,
                                 const AsymptoticBlocks& blocks, double level);

struct WaldResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// W = n g(theta_tilde)' [G V_sand G']^{-1} g(theta_tilde) for one
/// restriction, with V_sand the unconstrained sandwich; p-value from
/// chi-square with 1 degree of freedom.
WaldResult wald_test(const RestrictionExpr& restriction, const Eigen::VectorXd& theta_tilde,
                     const Dataset& data);

} // namespace softrestrict
