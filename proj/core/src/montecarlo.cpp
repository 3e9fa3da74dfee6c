#include "softrestrict/montecarlo.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "softrestrict/parallel.hpp"

namespace softrestrict {

ScenarioSpec ScenarioSpec::preset(int case_id) {
  ScenarioSpec spec;
  spec.case_id = case_id;
  spec.theta0.resize(11);
  switch (case_id) {
    case 1:
    case 3:
      spec.theta0 << 0.1, 0.3, 0.0, -0.5, 0.0, 0.3, 0.0, 0.4, 0.0, -0.2, 0.0;
      break;
    case 2:
      spec.theta0 << 0.1, 0.3, 0.2, -0.5, 0.0, 0.3, 0.0, 0.4, 0.0, -0.2, 0.0;
      break;
    default:
      throw std::invalid_argument("ScenarioSpec::preset: case_id must be 1, 2 or 3");
  }
  for (int j = 1; j <= spec.p_slopes; ++j)
    spec.restrictions.push_back("theta[" + std::to_string(j) + "]=0");
  if (case_id != 1)
    spec.restrictions.push_back("theta[1]+theta[2]+theta[3]+theta[4]=0");
  return spec;
}

void ScenarioSpec::validate() const {
  if (case_id < 1 || case_id > 3)
    throw std::invalid_argument("ScenarioSpec: case_id must be 1, 2 or 3");
  if (n <= p_slopes + 1) throw std::invalid_argument("ScenarioSpec: need n > p+1");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("ScenarioSpec: rho must lie in (0,1)");
  if (!(target_snr > 0.0)) throw std::invalid_argument("ScenarioSpec: target_snr must be positive");
  if (theta0.size() != p_slopes + 1)
    throw std::invalid_argument("ScenarioSpec: theta0 must have p_slopes+1 entries");
  if (restrictions.empty()) throw std::invalid_argument("ScenarioSpec: no restrictions");
  if (!(c0 > 0.0)) throw std::invalid_argument("ScenarioSpec: c0 must be positive");
  if (iterations < 1) throw std::invalid_argument("ScenarioSpec: iterations must be >= 1");
  if (grid_size < 2) throw std::invalid_argument("ScenarioSpec: grid_size must be >= 2");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("ScenarioSpec: level must lie in (0,1)");
  if (bootstrap_B < 0) throw std::invalid_argument("ScenarioSpec: bootstrap_B must be >= 0");
}

RestrictionSystem ScenarioSpec::build_system() const {
  std::vector<RestrictionExpr> exprs;
  exprs.reserve(restrictions.size());
  for (const auto& text : restrictions)
    exprs.push_back(RestrictionExpr::parse(text, p_slopes + 1));
  return RestrictionSystem::with_identity_sigma(std::move(exprs),
                                                std::vector<std::string>(restrictions));
}

Dataset generate_data(const ScenarioSpec& spec, std::uint64_t rep_seed) {
  Rng rng(rep_seed);
  const int n = spec.n;
  const int p = spec.p_slopes;

  Eigen::MatrixXd z(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) z(i, j) = rng.normal();

  Eigen::MatrixXd sigma_x(p, p);
  for (int j = 0; j < p; ++j)
    for (int l = 0; l < p; ++l) sigma_x(j, l) = std::pow(spec.rho, std::abs(j - l));
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma_x).matrixL();

  Dataset data;
  data.has_intercept = true;
  data.X.resize(n, p + 1);
  data.X.col(0).setOnes();
  data.X.rightCols(p) = z * chol.transpose();
  data.column_names.push_back("const");
  for (int j = 1; j <= p; ++j) data.column_names.push_back("x" + std::to_string(j));

  const Eigen::VectorXd linpred = data.X * spec.theta0;
  const double var_signal = (linpred.array() - linpred.mean()).square().sum() / n;
  const double sigma_eps = std::sqrt(var_signal / spec.target_snr);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) data.y[i] = linpred[i] + sigma_eps * rng.normal();
  return data;
}

namespace {

struct IterationOutcome {
  bool ok = false;
  Eigen::VectorXd theta_db;
  Eigen::VectorXd isp;
  std::vector<char> in_plateau;       // per restriction
  std::optional<int> cutoff;
  double lambda = 0.0, c_hat = 0.0;
  double risk = 0.0, bias_proxy = 0.0, var_proxy = 0.0;
  double r2 = 0.0;
  std::vector<char> covered_analytic; // per parameter
  std::vector<char> covered_boot;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
}

} // namespace

StudyResult run_study(const ScenarioSpec& spec, int iterations_override) {
  spec.validate();
  const int iterations = iterations_override > 0 ? iterations_override : spec.iterations;
  const RestrictionSystem system = spec.build_system();
  const int p = spec.p_slopes + 1;
  const int q = system.q();

  PipelineConfig pcfg;
  pcfg.c0 = spec.c0;
  pcfg.grid_size = spec.grid_size;
  pcfg.level = spec.level;
  pcfg.screen_level = spec.screen_level;

  std::vector<IterationOutcome> outcomes(static_cast<std::size_t>(iterations));
  parallel_for(iterations, spec.workers, [&](int it) {
    IterationOutcome& out = outcomes[static_cast<std::size_t>(it)];
    const std::uint64_t it_seed =
        derive_seed(spec.seed, "scenario-rep", static_cast<std::uint64_t>(it));
    const Dataset data = generate_data(spec, it_seed);
    FitResult fit;
    try {
      fit = run_pipeline(data, system, pcfg);
    } catch (const SolverError&) {
      return; // recorded as a failed iteration
    }

    out.theta_db = fit.debiased.theta_db;
    out.isp = fit.isp.isp;
    out.lambda = fit.solution.lambda;
    out.c_hat = fit.curve.c_hat;
    out.risk = fit.curve.total[fit.curve.c_hat_index];
    out.bias_proxy = fit.curve.bias_proxy[fit.curve.c_hat_index];
    out.var_proxy = fit.curve.var_proxy[fit.curve.c_hat_index];
    out.r2 = fit.r2_at_solution;
    out.cutoff = fit.isp.cutoff;

    out.covered_analytic.resize(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k)
      out.covered_analytic[static_cast<std::size_t>(k)] =
          (fit.debiased.ci_lower[k] <= spec.theta0[k] &&
           spec.theta0[k] <= fit.debiased.ci_upper[k])
              ? 1
              : 0;

    out.in_plateau.assign(static_cast<std::size_t>(q), 0);
    if (spec.bootstrap_B > 0) {
      BootstrapConfig bcfg;
      bcfg.B = spec.bootstrap_B;
      bcfg.law = spec.law;
      bcfg.seed = derive_seed(it_seed, "nested-bootstrap", 0);
      bcfg.level = spec.level;
      bcfg.workers = 1; // iterations already run in parallel
      try {
        const BootstrapSummary boot = run_bootstrap(data, system, fit, bcfg, pcfg);
        for (int j : boot.plateau_members_adjusted) out.in_plateau[static_cast<std::size_t>(j)] = 1;
        out.covered_boot.resize(static_cast<std::size_t>(p));
        for (int k = 0; k < p; ++k)
          out.covered_boot[static_cast<std::size_t>(k)] =
              (boot.theta_ci_lower[k] <= spec.theta0[k] &&
               spec.theta0[k] <= boot.theta_ci_upper[k])
                  ? 1
                  : 0;
      } catch (const SolverError&) {
        return; // bootstrap failure fails the iteration
      }
    } else {
      for (int j : fit.isp.plateau_members) out.in_plateau[static_cast<std::size_t>(j)] = 1;
    }
    out.ok = true;
  });

  StudyResult result;
  result.case_id = spec.case_id;
  result.theta0 = spec.theta0;
  result.restriction_labels = system.labels();
  result.parameter_names.push_back("const");
  for (int j = 1; j < p; ++j) result.parameter_names.push_back("theta" + std::to_string(j));

  int ok = 0;
  for (const auto& o : outcomes)
    if (o.ok) ++ok;
  result.iterations_run = ok;
  result.n_failures = iterations - ok;
  if (result.n_failures > 0.02 * iterations)
    throw SolverError("run_study: more than 2% of iterations failed", 0.0,
                      static_cast<double>(result.n_failures), 0.0);

  Eigen::MatrixXd thetas(ok, p), isps(ok, q);
  Eigen::MatrixXd cov_a = Eigen::MatrixXd::Zero(ok, p), cov_b = Eigen::MatrixXd::Zero(ok, p);
  Eigen::MatrixXd members = Eigen::MatrixXd::Zero(ok, q);
  std::vector<double> lambdas, c_hats, risks, biases, vars, r2s, cutoffs;
  int row = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    thetas.row(row) = o.theta_db.transpose();
    isps.row(row) = o.isp.transpose();
    for (int k = 0; k < p; ++k) {
      cov_a(row, k) = o.covered_analytic[static_cast<std::size_t>(k)];
      if (!o.covered_boot.empty()) cov_b(row, k) = o.covered_boot[static_cast<std::size_t>(k)];
    }
    for (int j = 0; j < q; ++j) members(row, j) = o.in_plateau[static_cast<std::size_t>(j)];
    lambdas.push_back(o.lambda);
    c_hats.push_back(o.c_hat);
    risks.push_back(o.risk);
    biases.push_back(o.bias_proxy);
    vars.push_back(o.var_proxy);
    r2s.push_back(o.r2);
    if (o.cutoff) cutoffs.push_back(static_cast<double>(*o.cutoff));
    ++row;
  }

  result.mean_estimate = thetas.colwise().mean();
  result.sd_estimate.resize(p);
  for (int k = 0; k < p; ++k) {
    std::vector<double> col(thetas.col(k).data(), thetas.col(k).data() + ok);
    result.sd_estimate[k] = sd_of(col);
  }
  result.mean_abs_bias = (result.mean_estimate - spec.theta0).cwiseAbs();
  result.mean_isp = isps.colwise().mean();
  result.sd_isp.resize(q);
  for (int j = 0; j < q; ++j) {
    std::vector<double> col(isps.col(j).data(), isps.col(j).data() + ok);
    result.sd_isp[j] = sd_of(col);
  }
  result.plateau_frequency = members.colwise().mean();
  result.lambda_mean = mean_of(lambdas);
  result.lambda_sd = sd_of(lambdas);
  result.c_hat_mean = mean_of(c_hats);
  result.c_hat_sd = sd_of(c_hats);
  result.risk_mean = mean_of(risks);
  result.risk_sd = sd_of(risks);
  result.bias_proxy_mean = mean_of(biases);
  result.bias_proxy_sd = sd_of(biases);
  result.var_proxy_mean = mean_of(vars);
  result.var_proxy_sd = sd_of(vars);
  result.r2_mean = mean_of(r2s);
  result.cutoff_defined = !cutoffs.empty();
  result.cutoff_mean = mean_of(cutoffs);
  result.cutoff_sd = sd_of(cutoffs);
  result.analytic_coverage = cov_a.colwise().mean();
  if (spec.bootstrap_B > 0) result.bootstrap_coverage = cov_b.colwise().mean();
  return result;
}

} // namespace softrestrict
