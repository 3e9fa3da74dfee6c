#pragma once

#include <optional>
#include <string>
#include <vector>

#include "softrestrict/inference.hpp"

namespace softrestrict {

/// Individual shadow prices 2 lambda sign(g_j) [Sigma^{-1} g]_j at the
/// solution; the zero vector when the constraint is slack.
Eigen::VectorXd compute_isp(const KktSolution& sol, const RestrictionSystem& system);

/// Delta-method covariance of the ISP vector (binding regime),
///   Sigma_ISP = J_t V1 J_t' + J_t V2 J_l' + J_l V2' J_t' + J_l V3 J_l',
/// with J_t = 2 lambda S Sigma^{-1} G and J_l = 2 S Sigma^{-1} g,
/// S = diag(sign g_j). Symmetrized after assembly.
Eigen::MatrixXd isp_covariance(const AsymptoticBlocks& blocks, const KktSolution& sol,
                               const RestrictionSystem& system);

/// Restrictions whose |g_j(theta_hat)| falls below 1e-8 (1 + ||g||): the
/// sign map is unstable there and they are excluded from covariance-based
/// plateau tests (their ISP is still reported).
std::vector<int> sign_unstable_indices(const KktSolution& sol,
                                       const RestrictionSystem& system);

struct PlateauResult {
  std::optional<int> cutoff;      // m_hat, counted over tested restrictions
  std::vector<double> break_stats; // B_m for m = m0..q_eff-1 (NaN when skipped)
  std::vector<int> admissible;    // candidates passing the homogeneity screen
  std::string diagnostic;
};

/// Structural-break cutoff on the ascending |ISP| sequence. For each
/// candidate m the contrast Delta_m (mean of the lowest m magnitudes minus
/// the mean of the rest) is tested with B_m = n Delta_m^2 / (w' Sigma_ISP w),
/// and candidates must pass a joint Wald homogeneity screen on the adjacent
/// pairwise contrasts within the lower block (chi-square, m-1 df, pass iff
/// p >= screen_level). m_hat maximizes B_m over the passers, or over all
/// candidates when none pass; ties go to the smallest m. Indices listed in
/// `excluded` do not participate.
PlateauResult plateau_cutoff(const Eigen::VectorXd& isp, const Eigen::MatrixXd& sigma_isp,
                             int n, double screen_level, int m0 = 1,
                             const std::vector<int>& excluded = {});

/// Full per-fit ISP summary.
struct IspReport {
  Eigen::VectorXd isp;
  Eigen::MatrixXd sigma_isp;
  std::vector<int> order;            // permutation sorting |ISP| ascending
  std::optional<int> cutoff;         // m_hat
  std::vector<int> plateau_members;  // restriction indices with rank <= m_hat
  std::vector<double> break_stats;
  std::vector<int> admissible;
  std::vector<int> sign_unstable;
  std::string diagnostic;
};

IspReport build_isp_report(const KktSolution& sol, const AsymptoticBlocks& blocks,
                           const RestrictionSystem& system, double screen_level);

} // namespace softrestrict
