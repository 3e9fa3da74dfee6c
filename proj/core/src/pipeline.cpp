#include "softrestrict/pipeline.hpp"

namespace softrestrict {

double r_squared(const Dataset& data, const Eigen::VectorXd& theta) {
  const double ssr = (data.y - data.X * theta).squaredNorm();
  const double tss = (data.y.array() - data.y.mean()).square().sum();
  return tss > 0.0 ? 1.0 - ssr / tss : 0.0;
}

FitResult run_pipeline(const Dataset& data, const RestrictionSystem& system,
                       const PipelineConfig& config) {
  const KktSolver solver(data, system, config.solver);
  ToleranceSelection selection = select_tolerance(solver, config.c0, config.grid_size);

  FitResult out;
  out.theta_tilde = solver.theta_tilde();
  out.curve = std::move(selection.curve);
  out.solution = std::move(selection.solution);
  out.blocks = compute_blocks(out.solution, solver.loss(), system);
  out.debiased = debias(out.solution, out.theta_tilde, data, system, out.blocks, config.level);
  out.isp = build_isp_report(out.solution, out.blocks, system, config.screen_level);
  out.r2_unconstrained = r_squared(data, out.theta_tilde);
  out.r2_at_solution = r_squared(data, out.solution.theta);
  out.r2_debiased = r_squared(data, out.debiased.theta_db);
  return out;
}

} // namespace softrestrict
