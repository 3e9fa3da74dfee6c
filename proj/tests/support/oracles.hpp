#pragma once

// Independent reference implementations used as test oracles. Everything
// here deliberately avoids the library's solver paths: dense inverses,
// plain bisection and exhaustive search only.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "softrestrict/model.hpp"
#include "softrestrict/restriction.hpp"
#include "softrestrict/rng.hpp"

namespace oracles {

// Central finite differences.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-5);
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-5);
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double step = 1e-4);

// Closed-form ridge path: slope-selector restrictions g_j = theta_j for
// j in `slopes`, identity credibility. theta(lambda) solves
// (X'X/n + 2 lambda P) theta = X'y/n via a dense inverse; lambda is found
// by bisection on ||P theta(lambda)||^2 = c.
struct RidgeOracle {
  Eigen::VectorXd theta;
  double lambda = 0.0;
  bool active = false;
};
RidgeOracle ridge_solution(const softrestrict::Dataset& data, const std::vector<int>& slopes,
                           double c);

// Exhaustive grid search of min (1/2n)||y - X theta||^2 s.t. h(theta) <= c
// over [center - radius, center + radius]^2 with the given step.
Eigen::Vector2d grid_search_2d(const softrestrict::Dataset& data,
                               const softrestrict::RestrictionSystem& system, double c,
                               const Eigen::Vector2d& center, double radius, double step);

// Textbook equality-constrained least squares via the closed projection
// formula theta_tilde - (X'X)^{-1} R' (R (X'X)^{-1} R')^{-1} (R theta_tilde - r).
Eigen::VectorXd restricted_ols_formula(const softrestrict::Dataset& data,
                                       const Eigen::VectorXd& R, double r);

// Kolmogorov-Smirnov distance of a sample against the standard normal.
double ks_distance_to_normal(std::vector<double> sample);

// Random problem generators for property suites.
softrestrict::Dataset random_dataset(softrestrict::Rng& rng, int n, int p);
softrestrict::RestrictionExpr random_polynomial_expr(softrestrict::Rng& rng, int p,
                                                     int max_degree);
softrestrict::RestrictionSystem random_system(softrestrict::Rng& rng, int p, int q,
                                              int max_degree, bool diagonal_sigma);

} // namespace oracles
