#pragma once

#include <cstdint>
#include <optional>

#include "softrestrict/pipeline.hpp"
#include "softrestrict/rng.hpp"

namespace softrestrict {

enum class MultiplierLaw { rademacher, mammen, gaussian };

MultiplierLaw multiplier_law_from_string(const std::string& name);
std::string to_string(MultiplierLaw law);

/// One multiplier draw with E[w]=0, E[w^2]=1.
double draw_multiplier(Rng& rng, MultiplierLaw law);

struct BootstrapConfig {
  int B = 200;
  MultiplierLaw law = MultiplierLaw::rademacher;
  std::uint64_t seed = 0;
  double level = 0.95;
  int workers = 1;
};

/// Pseudo-outcomes y_i = x_i' theta_hat + u_hat_i w_i with regressors held
/// fixed; residuals are taken at the supplied solution and not recentered.
Dataset wild_resample(const Dataset& data, const KktSolution& sol_at_chat,
                      const Eigen::VectorXd& multipliers);

/// One full re-run of the estimation pipeline on a resampled dataset.
struct BootstrapReplicate {
  double c_hat = 0.0;
  Eigen::VectorXd theta;
  double lambda = 0.0;
  Eigen::VectorXd isp;
  std::optional<int> cutoff;
};

BootstrapReplicate bootstrap_replicate(const Dataset& data, const RestrictionSystem& system,
                                       const KktSolution& sol_at_chat,
                                       const Eigen::VectorXd& multipliers,
                                       const PipelineConfig& pipeline_config);

struct BootstrapSummary {
  std::vector<double> c_hats;           // per successful replication
  Eigen::MatrixXd thetas;               // B_ok x p
  std::vector<double> lambdas;
  Eigen::MatrixXd isps;                 // B_ok x q
  std::vector<int> cutoffs;             // -1 encodes "none"
  Eigen::VectorXd theta_ci_lower;       // percentile interval bounds
  Eigen::VectorXd theta_ci_upper;
  double level = 0.0;
  bool cutoff_defined = false;
  double cutoff_mean = 0.0;
  double cutoff_sd = 0.0;
  double adjusted_boundary = 0.0;       // mean + sd, not rounded
  std::vector<int> plateau_members_adjusted; // original-fit ranks <= boundary
  std::vector<std::pair<int, int>> cutoff_histogram; // (m, count)
  int n_failures = 0;
  int B = 0;
};

/// Empirical quantile with linear interpolation on sorted order statistics.
double percentile(std::vector<double> values, double prob);

/// Mean / sd / adjusted boundary / histogram of the non-none cutoffs.
/// Returns cutoff_defined = false when no replication produced a cutoff.
void cutoff_distribution(BootstrapSummary& summary);

/// Wild bootstrap around a completed fit: every replication re-runs
/// tolerance selection, the inner solve, the ISP vector and the plateau
/// rule. Replication b draws its multipliers from a stream derived from
/// (seed, b); results are keyed by replication index so output is
/// identical for any worker count. Failing replications are dropped;
/// more than 5% failures aborts.
BootstrapSummary run_bootstrap(const Dataset& data, const RestrictionSystem& system,
                               const FitResult& fit, const BootstrapConfig& config,
                               const PipelineConfig& pipeline_config);

/// Convenience overload running the original pipeline first.
BootstrapSummary run_bootstrap(const Dataset& data, const RestrictionSystem& system,
                               const BootstrapConfig& config,
                               const PipelineConfig& pipeline_config);

} // namespace softrestrict
