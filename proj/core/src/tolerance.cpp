#include "softrestrict/tolerance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace softrestrict {

std::vector<double> tolerance_grid(double c0, int grid_size, double h_tilde) {
  if (!(c0 > 0.0)) throw std::invalid_argument("tolerance_grid: c0 must be positive");
  if (grid_size < 2) throw std::invalid_argument("tolerance_grid: grid_size must be >= 2");

  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(grid_size) + 24);
  // Geometric base on (c0*1e-3, c0]; the left endpoint stays excluded.
  for (int k = 1; k <= grid_size; ++k)
    grid.push_back(c0 * std::pow(1e-3, static_cast<double>(grid_size - k) / grid_size));

  const double floor = c0 * 1e-3;
  if (h_tilde > floor && h_tilde < c0) grid.push_back(h_tilde);
  if (h_tilde > floor) {
    // Refinement below the activation boundary, relative offsets ~sqrt(2)-spaced.
    const double anchor = std::min(h_tilde, c0);
    double delta = 5e-4;
    for (int j = 0; j < 20 && delta < 0.5; ++j, delta *= std::sqrt(2.0)) {
      const double point = anchor * (1.0 - delta);
      if (point > floor && point <= c0) grid.push_back(point);
    }
  }

  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double x, double y) { return std::fabs(x - y) <= 1e-12 * std::max(x, y); }),
             grid.end());
  return grid;
}

std::pair<double, double> risk_proxy(const KktSolution& sol,
                                     const Eigen::VectorXd& theta_tilde,
                                     const Dataset& data, const RestrictionSystem& system) {
  const LeastSquaresLoss loss(data);
  const AsymptoticBlocks blocks = compute_blocks(sol, loss, system);
  double bias = 0.0;
  if (sol.lambda != 0.0) {
    const Eigen::VectorXd a_tilde = system.eval_h_grad(theta_tilde);
    const Eigen::LDLT<Eigen::MatrixXd> hldlt(loss.hessian(theta_tilde));
    if (hldlt.info() != Eigen::Success)
      throw SolverError("risk_proxy: singular Hessian at theta_tilde", sol.c, 0.0, 0.0);
    bias = sol.lambda * sol.lambda * hldlt.solve(a_tilde).squaredNorm();
  }
  const double var = blocks.V1.trace() / blocks.scale_n;
  return {bias, var};
}

namespace {

RiskCurve build_curve(const KktSolver& solver, const std::vector<double>& grid,
                      const std::vector<KktSolution>& path, double c0) {
  const Loss& loss = solver.loss();
  const RestrictionSystem& system = solver.system();
  const Eigen::VectorXd& theta_tilde = solver.theta_tilde();

  // Shared pieces fixed at theta_tilde.
  const Eigen::MatrixXd H = loss.hessian(theta_tilde);
  const Eigen::LDLT<Eigen::MatrixXd> hldlt(H);
  const Eigen::VectorXd a_tilde = system.eval_h_grad(theta_tilde);
  const double bias_base = hldlt.solve(a_tilde).squaredNorm();

  // All slack points share the unconstrained sandwich variance.
  double slack_var = -1.0;

  RiskCurve curve;
  curve.c0 = c0;
  const std::size_t m = grid.size();
  curve.grid = grid;
  curve.bias_proxy.resize(m);
  curve.var_proxy.resize(m);
  curve.total.resize(m);
  curve.active.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const KktSolution& sol = path[i];
    curve.active[i] = sol.active ? 1 : 0;
    double var;
    if (sol.active) {
      const AsymptoticBlocks blocks = compute_blocks(sol, loss, system);
      var = blocks.V1.trace() / blocks.scale_n;
    } else {
      if (slack_var < 0.0) {
        const AsymptoticBlocks blocks = compute_blocks(sol, loss, system);
        slack_var = blocks.V1.trace() / blocks.scale_n;
      }
      var = slack_var;
    }
    curve.bias_proxy[i] = sol.lambda * sol.lambda * bias_base;
    curve.var_proxy[i] = var;
    curve.total[i] = curve.bias_proxy[i] + var;
  }

  // Grid minimum; exact ties resolve toward larger c.
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (curve.total[i] <= curve.total[best]) best = i;
  curve.c_hat_index = best;
  curve.c_hat = grid[best];
  return curve;
}

} // namespace

ToleranceSelection select_tolerance(const KktSolver& solver, double c0, int grid_size) {
  const std::vector<double> grid = tolerance_grid(c0, grid_size, solver.h_tilde());
  const std::vector<KktSolution> path = solver.solve_path(grid);
  ToleranceSelection out;
  out.curve = build_curve(solver, grid, path, c0);
  out.solution = path[out.curve.c_hat_index];
  return out;
}

ToleranceSelection select_tolerance(const Dataset& data, const RestrictionSystem& system,
                                    double c0, int grid_size, const SolverOptions& opts) {
  const KktSolver solver(data, system, opts);
  return select_tolerance(solver, c0, grid_size);
}

} // namespace softrestrict
