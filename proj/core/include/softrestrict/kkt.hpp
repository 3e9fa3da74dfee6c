#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "softrestrict/model.hpp"
#include "softrestrict/restriction.hpp"

namespace softrestrict {

/// Inner-solver failure; carries the tolerance and residuals at abort.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& message, double c, double stationarity_residual,
              double constraint_residual)
      : std::runtime_error(message + " (c=" + std::to_string(c) +
                           ", stationarity residual=" + std::to_string(stationarity_residual) +
                           ", constraint residual=" + std::to_string(constraint_residual) + ")"),
        c(c), stationarity_residual(stationarity_residual),
        constraint_residual(constraint_residual) {}
  double c;
  double stationarity_residual;
  double constraint_residual;
};

/// Solution of min phi_n(theta) s.t. h(theta) <= c at one tolerance.
/// Invariants on return: lambda >= 0 and active <=> lambda > 0;
/// |lambda (h_value - c)| <= 1e-8 (1+c); h_value <= c + 1e-8 (1+c);
/// stationarity residual below 1e-8 (1 + ||grad h||_inf).
struct KktSolution {
  double c = 0.0;
  Eigen::VectorXd theta;
  double lambda = 0.0;
  bool active = false;
  double kkt_residual = 0.0;
  double h_value = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double stationarity_tol = 1e-10;
  double constraint_tol = 1e-10; // scaled by (1+c)
  int max_outer_iterations = 200;
  int max_newton_iterations = 80;
};

/// Per-problem solver context: caches the unconstrained fit and reuses it
/// across tolerances. Pure with respect to solve calls; a single instance
/// may be shared by concurrent readers.
class KktSolver {
public:
  KktSolver(const Dataset& data, const RestrictionSystem& system, SolverOptions opts = {});
  KktSolver(const Loss& loss, const RestrictionSystem& system, SolverOptions opts = {});

  const Eigen::VectorXd& theta_tilde() const { return theta_tilde_; }
  double h_tilde() const { return h_tilde_; }
  const Loss& loss() const { return *loss_; }
  const RestrictionSystem& system() const { return *system_; }

  /// Solve at tolerance c > 0. When the unconstrained fit is feasible the
  /// constraint is slack and (theta_tilde, 0) is returned; otherwise the
  /// binding solution with h(theta)=c is found by a bracketed root-find on
  /// lambda around an inner stationarity solve.
  KktSolution solve(double c, const KktSolution* warm_start = nullptr) const;

  /// Warm-started sweep over a strictly ascending positive grid.
  std::vector<KktSolution> solve_path(const std::vector<double>& c_grid) const;

private:
  Eigen::VectorXd theta_for_lambda(double lambda, const Eigen::VectorXd& start,
                                   double c, int* newton_iters) const;
  double stationarity_residual(const Eigen::VectorXd& theta, double lambda) const;

  std::unique_ptr<LeastSquaresLoss> owned_loss_;
  const Loss* loss_;
  const RestrictionSystem* system_;
  SolverOptions opts_;
  Eigen::VectorXd theta_tilde_;
  double h_tilde_ = 0.0;
  bool closed_form_ = false; // quadratic loss + linear restrictions
};

/// One-shot wrappers around KktSolver.
KktSolution solve_inner(const Dataset& data, const RestrictionSystem& system, double c,
                        const KktSolution* warm_start = nullptr,
                        const SolverOptions& opts = {});
std::vector<KktSolution> solve_path(const Dataset& data, const RestrictionSystem& system,
                                    const std::vector<double>& c_grid,
                                    const SolverOptions& opts = {});

} // namespace softrestrict
