#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace softrestrict {

/// Problems with input data (file contents, ranks, non-finite values).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Observations for M-estimation: outcome y and design matrix X. When an
/// intercept is requested it is column 0 and consists of ones.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  bool has_intercept = false;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  /// Enforce n > p, finiteness and full column rank
  /// (smallest singular value > 1e-10 * largest). Throws DataError.
  void validate() const;

  /// Load from a CSV file with a header row. `outcome` names the y column;
  /// the remaining columns become regressors in file order.
  static Dataset from_csv(const std::string& path, const std::string& outcome,
                          bool add_intercept);
};

/// Loss, score and curvature information at a point.
struct LossEvaluation {
  double value = 0.0;
  Eigen::VectorXd grad;       // psi_n = mean of score rows
  Eigen::MatrixXd hess;       // symmetric
  Eigen::MatrixXd score_rows; // n x p, row i = psi_i(theta)
};

/// Extension surface for alternative losses. Least squares is the only
/// shipped implementation; the estimation pipeline is generic over this
/// interface. Implementations must be pure and safe for concurrent use.
class Loss {
public:
  virtual ~Loss() = default;
  virtual int dim() const = 0;
  virtual int sample_size() const = 0;
  virtual double value(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const = 0;
  /// Centered score covariance (1/n) sum_i (psi_i - psi_bar)(psi_i - psi_bar)'.
  virtual Eigen::MatrixXd score_covariance(const Eigen::VectorXd& theta) const = 0;
  /// Unconstrained minimizer.
  virtual Eigen::VectorXd fit() const = 0;
  /// True when the objective is exactly quadratic (constant Hessian).
  virtual bool quadratic() const { return false; }
};

/// phi_n(theta) = (1/2n) ||y - X theta||^2.
class LeastSquaresLoss final : public Loss {
public:
  explicit LeastSquaresLoss(const Dataset& data);

  int dim() const override { return static_cast<int>(xtx_.rows()); }
  int sample_size() const override { return static_cast<int>(data_->n()); }
  double value(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const override { return xtx_; }
  Eigen::MatrixXd score_covariance(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd fit() const override;
  bool quadratic() const override { return true; }

  /// H = X'X/n and b = X'y/n; gradient(theta) = H theta - b.
  const Eigen::MatrixXd& normal_matrix() const { return xtx_; }
  const Eigen::VectorXd& normal_rhs() const { return xty_; }
  const Dataset& data() const { return *data_; }

private:
  const Dataset* data_;
  Eigen::MatrixXd xtx_; // X'X / n
  Eigen::VectorXd xty_; // X'y / n
};

/// Full loss evaluation at theta, including the n x p matrix of
/// per-observation scores psi_i = -x_i (y_i - x_i' theta).
LossEvaluation loss_eval(const Dataset& data, const Eigen::VectorXd& theta);

/// Centered plug-in score covariance at theta.
Eigen::MatrixXd score_covariance(const Dataset& data, const Eigen::VectorXd& theta);

/// Unconstrained least-squares fit via column-pivoted QR.
Eigen::VectorXd fit_unconstrained(const Dataset& data);

} // namespace softrestrict
