#pragma once

#include <utility>
#include <vector>

#include "softrestrict/inference.hpp"
#include "softrestrict/kkt.hpp"

namespace softrestrict {

/// Risk decomposition along the tolerance grid. total = bias + var
/// elementwise; c_hat attains the grid minimum with ties broken toward
/// larger c.
struct RiskCurve {
  std::vector<double> grid;
  std::vector<double> bias_proxy; // lambda^2 ||H^{-1} a_tilde||^2
  std::vector<double> var_proxy;  // tr(V1)/n
  std::vector<double> total;
  std::vector<char> active;
  double c_hat = 0.0;
  std::size_t c_hat_index = 0;
  double c0 = 0.0;
};

/// Candidate tolerances: `grid_size` geometrically spaced points on
/// (c0 * 1e-3, c0], the point h(theta_tilde) when interior, and a local
/// refinement just below min(h_tilde, c0). The refinement resolves the
/// region where the multiplier (and hence the risk curve) varies fastest;
/// its points are anchored at h_tilde, so the selected tolerance is stable
/// under changes of c0 above the active region.
std::vector<double> tolerance_grid(double c0, int grid_size, double h_tilde);

/// Bias and variance proxies at one solution. theta_tilde is the
/// unconstrained fit; at slack points V1 is the unconstrained sandwich.
std::pair<double, double> risk_proxy(const KktSolution& sol,
                                     const Eigen::VectorXd& theta_tilde,
                                     const Dataset& data, const RestrictionSystem& system);

struct ToleranceSelection {
  RiskCurve curve;
  KktSolution solution; // at c_hat
};

ToleranceSelection select_tolerance(const Dataset& data, const RestrictionSystem& system,
                                    double c0, int grid_size,
                                    const SolverOptions& opts = {});
/// Variant reusing an existing solver context.
ToleranceSelection select_tolerance(const KktSolver& solver, double c0, int grid_size);

} // namespace softrestrict
