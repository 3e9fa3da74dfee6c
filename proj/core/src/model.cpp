#include "softrestrict/model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "csv_internal.hpp"

namespace softrestrict {

void Dataset::validate() const {
  const int n_obs = n();
  const int n_par = p();
  if (n_obs == 0 || n_par == 0) throw DataError("Dataset: empty design");
  if (y.size() != n_obs) throw DataError("Dataset: y and X row counts differ");
  if (n_obs <= n_par)
    throw DataError("Dataset: need n > p (n=" + std::to_string(n_obs) +
                    ", p=" + std::to_string(n_par) + ")");
  if (!y.allFinite() || !X.allFinite()) throw DataError("Dataset: non-finite entries");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-10 * sv[0])
    throw DataError("Dataset: design matrix is rank deficient");
}

using detail::parse_csv_double;
using detail::split_csv_line;

Dataset Dataset::from_csv(const std::string& path, const std::string& outcome,
                          bool add_intercept) {
  std::ifstream in(path);
  if (!in) throw DataError("CSV: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV: empty file '" + path + "'");
  const auto header = split_csv_line(line);
  int y_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == outcome) { y_col = static_cast<int>(j); break; }
  if (y_col < 0) throw DataError("CSV: outcome column '" + outcome + "' not found");

  std::vector<std::vector<double>> rows;
  std::vector<double> y_values;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row_index;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("CSV: row " + std::to_string(row_index) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::vector<double> x_row;
    x_row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_csv_double(cells[j], row_index, header[j]);
      if (static_cast<int>(j) == y_col)
        y_values.push_back(v);
      else
        x_row.push_back(v);
    }
    rows.push_back(std::move(x_row));
  }
  if (rows.empty()) throw DataError("CSV: no data rows in '" + path + "'");

  Dataset data;
  const int n = static_cast<int>(rows.size());
  const int n_reg = static_cast<int>(rows.front().size());
  const int offset = add_intercept ? 1 : 0;
  data.has_intercept = add_intercept;
  data.y = Eigen::Map<const Eigen::VectorXd>(y_values.data(), n);
  data.X.resize(n, n_reg + offset);
  if (add_intercept) data.X.col(0).setOnes();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n_reg; ++j) data.X(i, j + offset) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (add_intercept) data.column_names.push_back("const");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<int>(j) != y_col) data.column_names.push_back(header[j]);
  data.validate();
  return data;
}

// ---------------------------------------------------------------------------
// Least squares loss
// ---------------------------------------------------------------------------

LeastSquaresLoss::LeastSquaresLoss(const Dataset& data) : data_(&data) {
  const double n = static_cast<double>(data.n());
  xtx_ = data.X.transpose() * data.X / n;
  xty_ = data.X.transpose() * data.y / n;
}

double LeastSquaresLoss::value(const Eigen::VectorXd& theta) const {
  return (data_->y - data_->X * theta).squaredNorm() / (2.0 * data_->n());
}

Eigen::VectorXd LeastSquaresLoss::gradient(const Eigen::VectorXd& theta) const {
  return xtx_ * theta - xty_;
}

Eigen::MatrixXd LeastSquaresLoss::score_covariance(const Eigen::VectorXd& theta) const {
  return softrestrict::score_covariance(*data_, theta);
}

Eigen::VectorXd LeastSquaresLoss::fit() const { return fit_unconstrained(*data_); }

LossEvaluation loss_eval(const Dataset& data, const Eigen::VectorXd& theta) {
  if (theta.size() != data.p())
    throw std::invalid_argument("loss_eval: theta dimension mismatch");
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd resid = data.y - data.X * theta;
  LossEvaluation out;
  out.value = resid.squaredNorm() / (2.0 * n);
  out.score_rows = data.X.array().colwise() * (-resid.array());
  out.grad = out.score_rows.colwise().mean();
  out.hess = data.X.transpose() * data.X / n;
  return out;
}

Eigen::MatrixXd score_covariance(const Dataset& data, const Eigen::VectorXd& theta) {
  if (theta.size() != data.p())
    throw std::invalid_argument("score_covariance: theta dimension mismatch");
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd resid = data.y - data.X * theta;
  // psi_i = -x_i r_i, so sum psi psi' = X' diag(r^2) X and psi_bar = -X'r/n.
  const Eigen::MatrixXd weighted = data.X.array().colwise() * resid.array();
  Eigen::MatrixXd cov = weighted.transpose() * weighted / n;
  const Eigen::VectorXd mean = weighted.colwise().sum() / n;
  cov.noalias() -= mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd fit_unconstrained(const Dataset& data) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < data.p()) throw DataError("fit_unconstrained: rank-deficient design");
  return qr.solve(data.y);
}

} // namespace softrestrict
