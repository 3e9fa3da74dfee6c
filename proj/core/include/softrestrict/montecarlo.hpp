#pragma once

#include "softrestrict/bootstrap.hpp"

namespace softrestrict {

/// Simulation design: AR(1)-correlated Gaussian regressors plus intercept,
/// Gaussian noise calibrated per dataset to the target signal-to-noise
/// ratio, and a case-specific restriction set.
struct ScenarioSpec {
  int case_id = 1;
  int n = 1000;
  int p_slopes = 10;
  double rho = 0.8;
  double target_snr = 1.0;
  Eigen::VectorXd theta0;                  // intercept first, p_slopes slopes
  std::vector<std::string> restrictions;   // DSL strings over p_slopes+1 parameters
  double c0 = 1.0;
  int grid_size = 50;
  int iterations = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
  double screen_level = 0.05;
  int bootstrap_B = 0;
  MultiplierLaw law = MultiplierLaw::rademacher;
  int workers = 1;

  /// Built-in designs for cases 1-3: slope-zero restrictions on all ten
  /// slopes, plus the four-coefficient sum restriction in cases 2 and 3.
  static ScenarioSpec preset(int case_id);

  void validate() const;
  RestrictionSystem build_system() const;
};

/// Draw one dataset: X = [1, Z Sigma_X^{1/2}] with Sigma_X the AR(1)
/// correlation (Cholesky factor), noise variance set from the realized
/// variance of the linear predictor divided by target_snr.
Dataset generate_data(const ScenarioSpec& spec, std::uint64_t rep_seed);

struct StudyResult {
  int case_id = 0;
  int iterations_run = 0;
  int n_failures = 0;
  Eigen::VectorXd theta0;
  std::vector<std::string> parameter_names;
  std::vector<std::string> restriction_labels;
  Eigen::VectorXd mean_estimate;   // debiased estimator
  Eigen::VectorXd sd_estimate;
  Eigen::VectorXd mean_abs_bias;   // |mean estimate - theta0|
  Eigen::VectorXd mean_isp;
  Eigen::VectorXd sd_isp;
  Eigen::VectorXd plateau_frequency;
  double lambda_mean = 0.0, lambda_sd = 0.0;
  double c_hat_mean = 0.0, c_hat_sd = 0.0;
  double risk_mean = 0.0, risk_sd = 0.0;
  double bias_proxy_mean = 0.0, bias_proxy_sd = 0.0;
  double var_proxy_mean = 0.0, var_proxy_sd = 0.0;
  double cutoff_mean = 0.0, cutoff_sd = 0.0; // point cutoffs across iterations
  bool cutoff_defined = false;
  Eigen::VectorXd analytic_coverage;         // per parameter
  Eigen::VectorXd bootstrap_coverage;        // empty when bootstrap_B == 0
  double r2_mean = 0.0;
};

/// Full study: per iteration draw data, run the pipeline (plus the nested
/// wild bootstrap when bootstrap_B > 0, which then also supplies the
/// uncertainty-adjusted plateau membership), aggregate. Iteration i uses
/// seeds derived from (spec.seed, i); results are identical for any worker
/// count. More than 2% failed iterations aborts.
StudyResult run_study(const ScenarioSpec& spec, int iterations_override = 0);

} // namespace softrestrict
