#include "softrestrict/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "softrestrict/parallel.hpp"

namespace softrestrict {

MultiplierLaw multiplier_law_from_string(const std::string& name) {
  if (name == "rademacher") return MultiplierLaw::rademacher;
  if (name == "mammen") return MultiplierLaw::mammen;
  if (name == "gaussian") return MultiplierLaw::gaussian;
  throw std::invalid_argument("unknown multiplier law '" + name + "'");
}

std::string to_string(MultiplierLaw law) {
  switch (law) {
    case MultiplierLaw::rademacher: return "rademacher";
    case MultiplierLaw::mammen: return "mammen";
    case MultiplierLaw::gaussian: return "gaussian";
  }
  return "?";
}

double draw_multiplier(Rng& rng, MultiplierLaw law) {
  switch (law) {
    case MultiplierLaw::rademacher:
      return rng.uniform() < 0.5 ? -1.0 : 1.0;
    case MultiplierLaw::mammen: {
      // Two-point law with E[w]=0, E[w^2]=1, E[w^3]=1.
      static const double sqrt5 = std::sqrt(5.0);
      static const double p_low = (sqrt5 + 1.0) / (2.0 * sqrt5);
      return rng.uniform() < p_low ? -(sqrt5 - 1.0) / 2.0 : (sqrt5 + 1.0) / 2.0;
    }
    case MultiplierLaw::gaussian:
      return rng.normal();
  }
  return 0.0;
}

Dataset wild_resample(const Dataset& data, const KktSolution& sol_at_chat,
                      const Eigen::VectorXd& multipliers) {
  if (multipliers.size() != data.n())
    throw std::invalid_argument("wild_resample: multiplier count differs from n");
  const Eigen::VectorXd fitted = data.X * sol_at_chat.theta;
  Dataset out = data;
  out.y = fitted + (data.y - fitted).cwiseProduct(multipliers);
  return out;
}

BootstrapReplicate bootstrap_replicate(const Dataset& data, const RestrictionSystem& system,
                                       const KktSolution& sol_at_chat,
                                       const Eigen::VectorXd& multipliers,
                                       const PipelineConfig& pipeline_config) {
  const Dataset resampled = wild_resample(data, sol_at_chat, multipliers);
  const KktSolver solver(resampled, system, pipeline_config.solver);
  ToleranceSelection selection =
      select_tolerance(solver, pipeline_config.c0, pipeline_config.grid_size);
  const KktSolution& sol = selection.solution;

  BootstrapReplicate rep;
  rep.c_hat = selection.curve.c_hat;
  rep.theta = sol.theta;
  rep.lambda = sol.lambda;
  rep.isp = compute_isp(sol, system);
  if (sol.active) {
    const AsymptoticBlocks blocks = compute_blocks(sol, solver.loss(), system);
    const IspReport report =
        build_isp_report(sol, blocks, system, pipeline_config.screen_level);
    rep.cutoff = report.cutoff;
  }
  return rep;
}

double percentile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = prob * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void cutoff_distribution(BootstrapSummary& summary) {
  std::vector<int> observed;
  for (int m : summary.cutoffs)
    if (m >= 0) observed.push_back(m);
  summary.cutoff_histogram.clear();
  summary.cutoff_defined = false;
  if (observed.empty()) return;

  std::map<int, int> hist;
  double mean = 0.0;
  for (int m : observed) {
    mean += m;
    ++hist[m];
  }
  mean /= static_cast<double>(observed.size());
  double ss = 0.0;
  for (int m : observed) ss += (m - mean) * (m - mean);
  const double sd = observed.size() > 1
                        ? std::sqrt(ss / (static_cast<double>(observed.size()) - 1.0))
                        : 0.0;
  summary.cutoff_defined = true;
  summary.cutoff_mean = mean;
  summary.cutoff_sd = sd;
  summary.adjusted_boundary = mean + sd;
  summary.cutoff_histogram.assign(hist.begin(), hist.end());
}

BootstrapSummary run_bootstrap(const Dataset& data, const RestrictionSystem& system,
                               const BootstrapConfig& config,
                               const PipelineConfig& pipeline_config) {
  return run_bootstrap(data, system, run_pipeline(data, system, pipeline_config), config,
                       pipeline_config);
}

BootstrapSummary run_bootstrap(const Dataset& data, const RestrictionSystem& system,
                               const FitResult& fit, const BootstrapConfig& config,
                               const PipelineConfig& pipeline_config) {
  if (config.B < 1) throw std::invalid_argument("run_bootstrap: B must be >= 1");
  if (!(config.level > 0.0 && config.level < 1.0))
    throw std::invalid_argument("run_bootstrap: level must lie in (0,1)");

  const int n = data.n();
  const int p = data.p();
  const int q = system.q();
  std::vector<std::optional<BootstrapReplicate>> slots(static_cast<std::size_t>(config.B));

  parallel_for(config.B, config.workers, [&](int b) {
    Rng rng(derive_seed(config.seed, "wild-bootstrap", static_cast<std::uint64_t>(b)));
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = draw_multiplier(rng, config.law);
    try {
      slots[static_cast<std::size_t>(b)] =
          bootstrap_replicate(data, system, fit.solution, w, pipeline_config);
    } catch (const SolverError&) {
      // recorded as a failure below
    }
  });

  BootstrapSummary summary;
  summary.B = config.B;
  summary.level = config.level;
  int ok = 0;
  for (const auto& slot : slots)
    if (slot) ++ok;
  summary.n_failures = config.B - ok;
  if (summary.n_failures > 0.05 * config.B)
    throw SolverError("run_bootstrap: more than 5% of replications failed", 0.0,
                      static_cast<double>(summary.n_failures), 0.0);

  summary.c_hats.reserve(static_cast<std::size_t>(ok));
  summary.lambdas.reserve(static_cast<std::size_t>(ok));
  summary.cutoffs.reserve(static_cast<std::size_t>(ok));
  summary.thetas.resize(ok, p);
  summary.isps.resize(ok, q);
  int row = 0;
  for (const auto& slot : slots) {
    if (!slot) continue;
    summary.c_hats.push_back(slot->c_hat);
    summary.lambdas.push_back(slot->lambda);
    summary.cutoffs.push_back(slot->cutoff.value_or(-1));
    summary.thetas.row(row) = slot->theta.transpose();
    summary.isps.row(row) = slot->isp.transpose();
    ++row;
  }

  const double alpha = 1.0 - config.level;
  summary.theta_ci_lower.resize(p);
  summary.theta_ci_upper.resize(p);
  for (int k = 0; k < p; ++k) {
    std::vector<double> column(summary.thetas.col(k).data(),
                               summary.thetas.col(k).data() + ok);
    summary.theta_ci_lower[k] = percentile(column, 0.5 * alpha);
    summary.theta_ci_upper[k] = percentile(std::move(column), 1.0 - 0.5 * alpha);
  }

  cutoff_distribution(summary);
  if (summary.cutoff_defined) {
    // Membership: ascending |ISP| ranks of the original fit against the
    // real-valued boundary, no rounding.
    const auto& order = fit.isp.order;
    for (std::size_t r = 0; r < order.size(); ++r)
      if (static_cast<double>(r + 1) <= summary.adjusted_boundary)
        summary.plateau_members_adjusted.push_back(order[r]);
    std::sort(summary.plateau_members_adjusted.begin(),
              summary.plateau_members_adjusted.end());
  }
  return summary;
}

} // namespace softrestrict
