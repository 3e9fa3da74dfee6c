#pragma once

#include "softrestrict/bootstrap.hpp"

namespace softrestrict {

/// Growth-regression pipeline configuration. The design is
/// [1, ln s, ln(n + g_plus_delta)]; restrictions are the linear
/// coefficient-sum condition plus polynomial relaxations of orders
/// tau_list, with identity credibility weighting.
struct SolowConfig {
  std::string csv_path;
  std::string col_output = "y";
  std::string col_saving = "s";
  std::string col_popgrowth = "n";
  double g_plus_delta = 0.05;
  std::vector<int> tau_list = {2, 3};
  double c0 = 500.0;
  int grid_size = 50;
  double level = 0.95;
  double screen_level = 0.05;
  int bootstrap_B = 0;
  MultiplierLaw law = MultiplierLaw::rademacher;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Ingest the CSV and assemble design plus restriction system. Rows with
/// non-positive log arguments raise a DataError naming the row.
std::pair<Dataset, RestrictionSystem> build_solow_model(const SolowConfig& config);

/// Equality-constrained least squares for a single linear restriction
/// R theta = r, solved through the bordered KKT linear system.
Eigen::VectorXd restricted_ols(const Dataset& data, const RestrictionExpr& linear_restriction);

struct SolowReport {
  std::vector<std::string> column_names;
  std::vector<std::string> restriction_labels;
  Eigen::VectorXd theta_unrestricted;
  Eigen::VectorXd se_unrestricted;
  double r2_unrestricted = 0.0;
  Eigen::VectorXd theta_restricted;
  Eigen::VectorXd se_restricted;
  double r2_restricted = 0.0;
  WaldResult wald_linear;
  FitResult fit; // soft estimation at the selected tolerance
  std::optional<BootstrapSummary> bootstrap;
  int n_obs = 0;
};

/// Full comparison: unrestricted OLS, exactly-restricted OLS under the
/// linear condition, the soft/debiased estimator, the Wald test and the
/// ISP plateau classification of all restrictions.
SolowReport run_solow(const SolowConfig& config);

/// Synthetic cross-country table drawn from the restricted structural
/// equation ln y = intercept + slope ln s - slope ln(n + g_plus_delta) + e.
/// Returns CSV text with columns country,y,s,n.
struct SolowSyntheticConfig {
  int n = 120;
  double slope = 1.3791;
  double intercept = 8.3748;
  double noise_sd = 0.3;
  double g_plus_delta = 0.05;
  std::uint64_t seed = 424242;
};
std::string synthetic_solow_csv(const SolowSyntheticConfig& config);

} // namespace softrestrict
