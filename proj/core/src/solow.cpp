#include "softrestrict/solow.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>

#include "csv_internal.hpp"

namespace softrestrict {

namespace {

std::string format_short(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

} // namespace

std::pair<Dataset, RestrictionSystem> build_solow_model(const SolowConfig& config) {
  if (!(config.g_plus_delta > 0.0))
    throw std::invalid_argument("build_solow_model: g_plus_delta must be positive");

  std::ifstream in(config.csv_path);
  if (!in) throw DataError("CSV: cannot open '" + config.csv_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV: empty file '" + config.csv_path + "'");
  const auto header = detail::split_csv_line(line);
  int col_y = -1, col_s = -1, col_n = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == config.col_output) col_y = static_cast<int>(j);
    if (header[j] == config.col_saving) col_s = static_cast<int>(j);
    if (header[j] == config.col_popgrowth) col_n = static_cast<int>(j);
  }
  if (col_y < 0 || col_s < 0 || col_n < 0)
    throw DataError("CSV: missing one of the columns '" + config.col_output + "', '" +
                    config.col_saving + "', '" + config.col_popgrowth + "'");

  std::vector<double> log_y, log_s, log_n;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("CSV: row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    const double y = detail::parse_csv_double(cells[static_cast<std::size_t>(col_y)], row,
                                              config.col_output);
    const double s = detail::parse_csv_double(cells[static_cast<std::size_t>(col_s)], row,
                                              config.col_saving);
    const double gr = detail::parse_csv_double(cells[static_cast<std::size_t>(col_n)], row,
                                               config.col_popgrowth);
    if (!(y > 0.0))
      throw DataError("Solow: non-positive output in data row " + std::to_string(row));
    if (!(s > 0.0))
      throw DataError("Solow: non-positive saving rate in data row " + std::to_string(row));
    if (!(gr + config.g_plus_delta > 0.0))
      throw DataError("Solow: non-positive n+g+delta in data row " + std::to_string(row));
    log_y.push_back(std::log(y));
    log_s.push_back(std::log(s));
    log_n.push_back(std::log(gr + config.g_plus_delta));
  }
  if (log_y.empty()) throw DataError("CSV: no data rows in '" + config.csv_path + "'");

  Dataset data;
  const int n = static_cast<int>(log_y.size());
  data.has_intercept = true;
  data.y = Eigen::Map<const Eigen::VectorXd>(log_y.data(), n);
  data.X.resize(n, 3);
  data.X.col(0).setOnes();
  data.X.col(1) = Eigen::Map<const Eigen::VectorXd>(log_s.data(), n);
  data.X.col(2) = Eigen::Map<const Eigen::VectorXd>(log_n.data(), n);
  data.column_names = {"const", "ln_s", "ln(n+" + format_short(config.g_plus_delta) + ")"};
  data.validate();

  std::vector<std::string> texts;
  texts.push_back("theta[1]+theta[2]=0");
  for (int tau : config.tau_list) {
    if (tau < 2) throw std::invalid_argument("build_solow_model: tau must be >= 2");
    texts.push_back("theta[1]-(-theta[2])^" + std::to_string(tau) + "=0");
  }
  std::vector<RestrictionExpr> exprs;
  exprs.reserve(texts.size());
  for (const auto& text : texts) exprs.push_back(RestrictionExpr::parse(text, 3));
  return {std::move(data),
          RestrictionSystem::with_identity_sigma(std::move(exprs), std::move(texts))};
}

Eigen::VectorXd restricted_ols(const Dataset& data, const RestrictionExpr& linear_restriction) {
  if (linear_restriction.dim() != data.p())
    throw std::invalid_argument("restricted_ols: restriction dimension mismatch");
  if (!linear_restriction.linear())
    throw std::invalid_argument("restricted_ols: restriction must be linear");
  const int p = data.p();
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd R = linear_restriction.gradient(origin);
  const double r = -linear_restriction.value(origin); // g(theta) = R'theta - r

  Eigen::MatrixXd kkt(p + 1, p + 1);
  kkt.topLeftCorner(p, p) = data.X.transpose() * data.X;
  kkt.topRightCorner(p, 1) = R;
  kkt.bottomLeftCorner(1, p) = R.transpose();
  kkt(p, p) = 0.0;
  Eigen::VectorXd rhs(p + 1);
  rhs.head(p) = data.X.transpose() * data.y;
  rhs[p] = r;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) throw SolverError("restricted_ols: singular KKT system", 0.0, 0.0, 0.0);
  Eigen::VectorXd theta = lu.solve(rhs).head(p);
  // One refinement pass keeps the equality tight at roundoff level.
  const double gap = R.dot(theta) - r;
  if (gap != 0.0) {
    const Eigen::LDLT<Eigen::MatrixXd> xtx(data.X.transpose() * data.X);
    const Eigen::VectorXd dir = xtx.solve(R);
    theta -= dir * (gap / R.dot(dir));
  }
  return theta;
}

namespace {

Eigen::VectorXd sandwich_se(const Dataset& data, const Eigen::VectorXd& theta) {
  const LeastSquaresLoss loss(data);
  const Eigen::MatrixXd H = loss.hessian(theta);
  const Eigen::LDLT<Eigen::MatrixXd> hldlt(H);
  const Eigen::MatrixXd hinv_s = hldlt.solve(loss.score_covariance(theta));
  const Eigen::MatrixXd sandwich = hldlt.solve(hinv_s.transpose());
  return (sandwich.diagonal() / data.n()).cwiseMax(0.0).cwiseSqrt();
}

// Standard errors of an exactly-restricted OLS fit: the sandwich projected
// onto the tangent space of the binding linear restriction.
Eigen::VectorXd restricted_se(const Dataset& data, const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& R) {
  const LeastSquaresLoss loss(data);
  const Eigen::MatrixXd H = loss.hessian(theta);
  const Eigen::LDLT<Eigen::MatrixXd> hldlt(H);
  const Eigen::VectorXd hinv_r = hldlt.solve(R);
  Eigen::MatrixXd M = hldlt.solve(Eigen::MatrixXd::Identity(data.p(), data.p()));
  M -= hinv_r * hinv_r.transpose() / R.dot(hinv_r);
  const Eigen::MatrixXd v = M * loss.score_covariance(theta) * M.transpose();
  return (v.diagonal() / data.n()).cwiseMax(0.0).cwiseSqrt();
}

} // namespace

SolowReport run_solow(const SolowConfig& config) {
  auto [data, system] = build_solow_model(config);

  SolowReport report;
  report.n_obs = data.n();
  report.column_names = data.column_names;
  report.restriction_labels = system.labels();

  report.theta_unrestricted = fit_unconstrained(data);
  report.se_unrestricted = sandwich_se(data, report.theta_unrestricted);
  report.r2_unrestricted = r_squared(data, report.theta_unrestricted);

  const RestrictionExpr& linear = system.expr(0);
  report.theta_restricted = restricted_ols(data, linear);
  report.se_restricted =
      restricted_se(data, report.theta_restricted,
                    linear.gradient(Eigen::VectorXd::Zero(data.p())));
  report.r2_restricted = r_squared(data, report.theta_restricted);

  report.wald_linear = wald_test(linear, report.theta_unrestricted, data);

  PipelineConfig pcfg;
  pcfg.c0 = config.c0;
  pcfg.grid_size = config.grid_size;
  pcfg.level = config.level;
  pcfg.screen_level = config.screen_level;
  report.fit = run_pipeline(data, system, pcfg);

  if (config.bootstrap_B > 0) {
    BootstrapConfig bcfg;
    bcfg.B = config.bootstrap_B;
    bcfg.law = config.law;
    bcfg.seed = derive_seed(config.seed, "solow-bootstrap", 0);
    bcfg.level = config.level;
    bcfg.workers = config.workers;
    report.bootstrap = run_bootstrap(data, system, report.fit, bcfg, pcfg);
  }
  return report;
}

std::string synthetic_solow_csv(const SolowSyntheticConfig& config) {
  Rng rng(config.seed);
  std::string out = "country,y,s,n\n";
  const auto append_value = [&out](double v) {
    char buf[40];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
    out.append(buf, res.ptr);
  };
  for (int i = 0; i < config.n; ++i) {
    // Saving rates log-uniform on [0.05, 0.45], growth uniform on [0.003, 0.04].
    const double s = std::exp(std::log(0.05) + rng.uniform() * (std::log(0.45) - std::log(0.05)));
    const double gr = 0.003 + rng.uniform() * 0.037;
    const double noise = config.noise_sd * rng.normal();
    const double log_y = config.intercept +
                         config.slope * (std::log(s) - std::log(gr + config.g_plus_delta)) +
                         noise;
    out += 'C';
    out += std::to_string(i + 1);
    out += ',';
    append_value(std::exp(log_y));
    out += ',';
    append_value(s);
    out += ',';
    append_value(gr);
    out += '\n';
  }
  return out;
}

} // namespace softrestrict
