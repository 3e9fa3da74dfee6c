#include "softrestrict/isp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "softrestrict/stats.hpp"

namespace softrestrict {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace

Eigen::VectorXd compute_isp(const KktSolution& sol, const RestrictionSystem& system) {
  const int q = system.q();
  if (sol.lambda == 0.0) return Eigen::VectorXd::Zero(q);
  const Eigen::VectorXd g = system.eval_g(sol.theta);
  const Eigen::VectorXd weighted = system.sigma_solve(g);
  Eigen::VectorXd isp(q);
  for (int j = 0; j < q; ++j) isp[j] = 2.0 * sol.lambda * sign_of(g[j]) * weighted[j];
  return isp;
}

Eigen::MatrixXd isp_covariance(const AsymptoticBlocks& blocks, const KktSolution& sol,
                               const RestrictionSystem& system) {
  const int q = system.q();
  if (!sol.active || sol.lambda == 0.0) return Eigen::MatrixXd::Zero(q, q);
  const Eigen::VectorXd g = system.eval_g(sol.theta);
  Eigen::VectorXd signs(q);
  // sign treated as +1 at an exact zero; such indices are flagged separately.
  for (int j = 0; j < q; ++j) signs[j] = g[j] < 0.0 ? -1.0 : 1.0;

  const Eigen::MatrixXd SG = signs.asDiagonal() * system.sigma_solve(system.eval_G(sol.theta));
  const Eigen::MatrixXd J_theta = 2.0 * sol.lambda * SG;              // q x p
  const Eigen::VectorXd J_lambda = 2.0 * (signs.asDiagonal() * system.sigma_solve(g)); // q

  Eigen::MatrixXd cov = J_theta * blocks.V1 * J_theta.transpose();
  const Eigen::VectorXd cross = J_theta * blocks.V2; // q
  cov.noalias() += cross * J_lambda.transpose();
  cov.noalias() += J_lambda * cross.transpose();
  cov.noalias() += blocks.V3 * J_lambda * J_lambda.transpose();
  return 0.5 * (cov + cov.transpose()).eval();
}

std::vector<int> sign_unstable_indices(const KktSolution& sol,
                                       const RestrictionSystem& system) {
  const Eigen::VectorXd g = system.eval_g(sol.theta);
  const double threshold = 1e-8 * (1.0 + g.norm());
  std::vector<int> out;
  for (int j = 0; j < system.q(); ++j)
    if (std::fabs(g[j]) < threshold) out.push_back(j);
  return out;
}

PlateauResult plateau_cutoff(const Eigen::VectorXd& isp, const Eigen::MatrixXd& sigma_isp,
                             int n, double screen_level, int m0,
                             const std::vector<int>& excluded) {
  const int q = static_cast<int>(isp.size());
  PlateauResult out;
  if (sigma_isp.rows() != q || sigma_isp.cols() != q)
    throw std::invalid_argument("plateau_cutoff: covariance dimension mismatch");
  if (m0 < 1) throw std::invalid_argument("plateau_cutoff: m0 must be >= 1");

  std::vector<int> included;
  for (int j = 0; j < q; ++j)
    if (std::find(excluded.begin(), excluded.end(), j) == excluded.end())
      included.push_back(j);
  const int qe = static_cast<int>(included.size());
  if (qe < 2) {
    out.diagnostic = "plateau: needs at least two tested restrictions";
    return out;
  }

  // Magnitudes and the covariance of |ISP| via the local sign map.
  Eigen::VectorXd t(qe);
  Eigen::VectorXd s(qe);
  for (int i = 0; i < qe; ++i) {
    const double v = isp[included[static_cast<std::size_t>(i)]];
    t[i] = std::fabs(v);
    s[i] = v < 0.0 ? -1.0 : 1.0; // +1 at zero
  }
  Eigen::MatrixXd cov(qe, qe);
  for (int i = 0; i < qe; ++i)
    for (int j = 0; j < qe; ++j)
      cov(i, j) = s[i] * s[j] *
                  sigma_isp(included[static_cast<std::size_t>(i)], included[static_cast<std::size_t>(j)]);

  // Ascending magnitude order (stable on ties by original index).
  std::vector<int> rank(static_cast<std::size_t>(qe));
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return t[a] < t[b]; });

  const double cov_scale = std::max(cov.diagonal().maxCoeff(), 0.0);
  const double degenerate_tol = 1e-15 * std::max(cov_scale, 1e-300);

  const int n_candidates = qe - m0;
  out.break_stats.assign(static_cast<std::size_t>(std::max(n_candidates, 0)),
                         std::numeric_limits<double>::quiet_NaN());
  double best_stat = -1.0;
  int best_m = -1;
  bool any_admissible = false;
  double best_stat_all = -1.0;
  int best_m_all = -1;

  for (int m = m0; m <= qe - 1; ++m) {
    // Break contrast: mean of the lowest m magnitudes minus mean of the rest.
    double low = 0.0, high = 0.0;
    for (int r = 0; r < m; ++r) low += t[rank[static_cast<std::size_t>(r)]];
    for (int r = m; r < qe; ++r) high += t[rank[static_cast<std::size_t>(r)]];
    const double delta = low / m - high / (qe - m);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(qe);
    for (int r = 0; r < qe; ++r)
      w[rank[static_cast<std::size_t>(r)]] = r < m ? 1.0 / m : -1.0 / (qe - m);
    const double var = w.dot(cov * w);
    if (!(var > degenerate_tol)) continue; // skipped candidate, stays NaN

    const double stat = n * delta * delta / var;
    out.break_stats[static_cast<std::size_t>(m - m0)] = stat;
    if (stat > best_stat_all) { best_stat_all = stat; best_m_all = m; }

    // Homogeneity screen: adjacent pairwise contrasts within the lower block.
    bool pass = true;
    if (m >= 2) {
      Eigen::MatrixXd contrasts = Eigen::MatrixXd::Zero(m - 1, qe);
      Eigen::VectorXd d(m - 1);
      for (int k = 0; k < m - 1; ++k) {
        const int i_low = rank[static_cast<std::size_t>(k)];
        const int i_high = rank[static_cast<std::size_t>(k + 1)];
        contrasts(k, i_high) = 1.0;
        contrasts(k, i_low) -= 1.0;
        d[k] = t[i_high] - t[i_low];
      }
      const Eigen::MatrixXd vd = contrasts * cov * contrasts.transpose();
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(vd);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          ldlt.vectorD().minCoeff() <= degenerate_tol) {
        pass = false; // cannot verify homogeneity on a degenerate block
      } else {
        const double wald = n * d.dot(ldlt.solve(d));
        pass = chi2_sf(wald, static_cast<double>(m - 1)) >= screen_level;
      }
    }
    if (pass) {
      any_admissible = true;
      out.admissible.push_back(m);
      if (stat > best_stat) { best_stat = stat; best_m = m; }
    }
  }

  if (best_m_all < 0) {
    out.diagnostic = "plateau: all break contrasts have degenerate variance";
    return out;
  }
  out.cutoff = any_admissible ? best_m : best_m_all;
  if (!any_admissible) out.diagnostic = "plateau: no candidate passed the homogeneity screen";
  return out;
}

IspReport build_isp_report(const KktSolution& sol, const AsymptoticBlocks& blocks,
                           const RestrictionSystem& system, double screen_level) {
  IspReport report;
  report.isp = compute_isp(sol, system);
  const int q = system.q();
  report.order.resize(static_cast<std::size_t>(q));
  std::iota(report.order.begin(), report.order.end(), 0);
  std::stable_sort(report.order.begin(), report.order.end(), [&](int a, int b) {
    return std::fabs(report.isp[a]) < std::fabs(report.isp[b]);
  });

  if (!sol.active || sol.lambda == 0.0) {
    report.sigma_isp = Eigen::MatrixXd::Zero(q, q);
    report.diagnostic = "inactive solution: all shadow prices are zero";
    return report;
  }
  report.sign_unstable = sign_unstable_indices(sol, system);
  report.sigma_isp = isp_covariance(blocks, sol, system);
  const PlateauResult plateau = plateau_cutoff(report.isp, report.sigma_isp, blocks.scale_n,
                                               screen_level, 1, report.sign_unstable);
  report.cutoff = plateau.cutoff;
  report.break_stats = plateau.break_stats;
  report.admissible = plateau.admissible;
  report.diagnostic = plateau.diagnostic;
  if (report.cutoff) {
    // Members: the lowest-ranked tested restrictions up to the cutoff.
    std::vector<int> tested_order;
    for (int idx : report.order)
      if (std::find(report.sign_unstable.begin(), report.sign_unstable.end(), idx) ==
          report.sign_unstable.end())
        tested_order.push_back(idx);
    for (int r = 0; r < *report.cutoff && r < static_cast<int>(tested_order.size()); ++r)
      report.plateau_members.push_back(tested_order[static_cast<std::size_t>(r)]);
    std::sort(report.plateau_members.begin(), report.plateau_members.end());
  }
  return report;
}

} // namespace softrestrict
