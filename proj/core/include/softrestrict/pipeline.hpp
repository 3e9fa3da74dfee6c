#pragma once

#include "softrestrict/isp.hpp"
#include "softrestrict/tolerance.hpp"

namespace softrestrict {

struct PipelineConfig {
  double c0 = 1.0;
  int grid_size = 50;
  double level = 0.95;
  double screen_level = 0.05;
  SolverOptions solver;
};

/// One full estimation pass: unconstrained fit, tolerance selection, inner
/// solve at c_hat, variance blocks, debiasing and the ISP/plateau summary.
struct FitResult {
  Eigen::VectorXd theta_tilde;
  RiskCurve curve;
  KktSolution solution;
  AsymptoticBlocks blocks;
  DebiasedEstimate debiased;
  IspReport isp;
  double r2_unconstrained = 0.0;
  double r2_at_solution = 0.0;
  double r2_debiased = 0.0;
};

double r_squared(const Dataset& data, const Eigen::VectorXd& theta);

FitResult run_pipeline(const Dataset& data, const RestrictionSystem& system,
                       const PipelineConfig& config);

} // namespace softrestrict
